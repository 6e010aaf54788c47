"""The simulated world: hand actuators, object contact, hold and slip physics.

Contact geometry is a per-finger 1-D closure model. Each finger's
aperture (distance from the grasp axis) derives from its two joints;
closing past the object surface produces an overlap that is shared
between skin indentation and object deformation by force balance:

    indentation = overlap / (1 + stiffness * compliance)
    normal_force = stiffness * indentation

Actuators move toward their targets at a bounded speed and stall once
the fingertip normal force reaches the per-family force cap. Sensor
fields are the indentation spread over the contact patch through a
radial falloff around the (possibly shaking) contact centre.

Holding is a friction balance: the grasp holds when the summed tangential
capacity ``sum(N_i * mu_i) * quality`` covers the object weight times the
dynamic load factor; any deficit accrues slip at a proportional rate, and
slip past the drop threshold is a drop. Flat, edge-blind fingertips lose
contact outright when object deformation under load displaces the contact
patch onto their edges (the heavy-bottle case).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .control import JointLimits, as_joint_vector
from .errors import ConfigurationError
from .fingertips import ContactField, FingertipKind, SensorLayout
from .objects import ObjectSpec
from .shake import GRAVITY


class GraspStatus(str, Enum):
    HELD = "held"
    SLIPPED = "slipped"
    DROPPED = "dropped"
    CONTACT_LOST = "contact_lost"


@dataclass(frozen=True)
class GraspOutcome:
    status: GraspStatus
    slip_distance_mm: float
    peak_load_factor: float
    annotation: str = ""

    def __post_init__(self):
        if self.slip_distance_mm < 0:
            raise ConfigurationError("slip distance must be >= 0")

    @property
    def failed(self) -> bool:
        return self.status in (GraspStatus.DROPPED, GraspStatus.CONTACT_LOST)


@dataclass
class HandState:
    """Snapshot of the reduced 3-finger hand."""

    joints: np.ndarray                  # 6 normalised actuator positions
    apertures_cm: np.ndarray            # per finger
    forces_n: np.ndarray                # per-finger normal force
    calibration_drift: float = 0.0      # accumulated actuator error

    def copy(self) -> "HandState":
        return HandState(self.joints.copy(), self.apertures_cm.copy(),
                         self.forces_n.copy(), self.calibration_drift)


@dataclass(frozen=True)
class PlantParams:
    """Physics constants; per-kind entries are keyed by FingertipKind value."""

    stiffness_n_per_mm: dict
    force_cap_n: dict
    actuator_speed_per_s: float = 0.6
    aperture_scale_cm: float = 12.0
    contact_sigma: float = 0.30
    center_coupling: float = 0.04       # patch shift per 10 deg of shake angle
    slip_gain_mm_per_ns: float = 60.0
    drop_threshold_mm: float = 20.0
    placement_jitter_mm: float = 2.0
    slip_onset_coeff: dict = field(default_factory=lambda: {"biotac": 1.0, "wts": 0.7})
    slip_alpha_mm_per_n: dict = field(default_factory=lambda: {"biotac": 0.8, "wts": 1.2})
    slip_beta_mm_per_n2: dict = field(default_factory=lambda: {"biotac": 0.05, "wts": 0.15})
    drift_rate: float = 1e-6            # per (gram of tip mass * newton * second)
    object_friction: dict = field(default_factory=dict)
    object_compliance: dict = field(default_factory=dict)
    grip_quality: dict = field(default_factory=dict)   # "object|kind" -> factor

    def for_kind(self, table: dict, kind: FingertipKind) -> float:
        return float(table[kind.value])

    def quality(self, object_name: str, kind: FingertipKind) -> float:
        return float(self.grip_quality.get(f"{object_name}|{kind.value}", 1.0))


def default_plant_params() -> PlantParams:
    return PlantParams(
        stiffness_n_per_mm={"biotac": 1.2, "wts": 0.185},
        force_cap_n={"biotac": 10.0, "wts": 7.0},
    )


class Plant:
    """Single-owner stepped simulation of one grasp scene."""

    def __init__(self, obj: ObjectSpec, layout: SensorLayout, params: PlantParams,
                 limits: JointLimits, seed=0):
        self.object = obj
        self.layout = layout
        self.params = params
        self.limits = limits
        self.stiffness = params.for_kind(params.stiffness_n_per_mm, layout.kind)
        self.force_cap = params.for_kind(params.force_cap_n, layout.kind)
        self.friction = float(params.object_friction.get(obj.name, obj.surface_friction))
        self.compliance = float(params.object_compliance.get(obj.name, obj.deformability_mm_per_n))
        self.mu_effective = min(layout.friction_mu, self.friction)
        self.quality = params.quality(obj.name, layout.kind)

        # Manual placement jitter: the object sits off-centre by up to the
        # configured amount, toward one finger and away from the others.
        rng = np.random.default_rng((int(seed), 0x9E3779B9))
        jitter = rng.uniform(-params.placement_jitter_mm, params.placement_jitter_mm)
        self.finger_offsets_mm = np.array([jitter, -jitter / 2.0, -jitter / 2.0])

        self._positions = np.asarray(layout.sensor_positions, dtype=np.float64)
        self.state = HandState(
            joints=self.limits.upper_array.copy(),
            apertures_cm=np.zeros(3),
            forces_n=np.zeros(3),
        )
        self._indentations_mm = np.zeros(3)
        self._overlaps_mm = np.zeros(3)
        self._refresh(self.state.joints)

    # -- geometry -----------------------------------------------------------

    @property
    def edge_lost(self) -> bool:
        """Contact displaced onto the fingertip edges (edge-blind tips only)."""
        return (not self.layout.edge_sensitive
                and self.object.edge_shift_mass_g is not None
                and self.object.total_mass_g > self.object.edge_shift_mass_g)

    def _aperture_cm(self, joints: np.ndarray, finger: int) -> float:
        i = 2 * finger
        return self.params.aperture_scale_cm * 0.5 * (float(joints[i]) + float(joints[i + 1]))

    def _stall_aperture_cm(self, finger: int) -> float:
        """Aperture at which the fingertip force equals the force cap."""
        net_cap = self.force_cap / self.stiffness
        overlap_cap = net_cap * (1.0 + self.stiffness * self.compliance)
        reach_mm = self.object.effective_radius_cm * 10.0 + self.finger_offsets_mm[finger]
        return (reach_mm - overlap_cap) / 10.0

    def _refresh(self, joints: np.ndarray):
        """Recompute apertures, overlaps, indentations and forces from joints."""
        softness = 1.0 + self.stiffness * self.compliance
        for finger in range(3):
            aperture = self._aperture_cm(joints, finger)
            reach_mm = self.object.effective_radius_cm * 10.0 + self.finger_offsets_mm[finger]
            overlap = max(0.0, reach_mm - aperture * 10.0)
            net = overlap / softness
            self._overlaps_mm[finger] = overlap
            self._indentations_mm[finger] = net
            self.state.forces_n[finger] = self.stiffness * net
            self.state.apertures_cm[finger] = aperture
        self.state.joints = joints

    def sensor_weights(self, center_shift=(0.0, 0.0)) -> np.ndarray:
        center = np.array([0.5 + center_shift[0], 0.5 + center_shift[1]])
        d2 = np.sum((self._positions - center) ** 2, axis=1)
        return np.exp(-d2 / (2.0 * self.params.contact_sigma ** 2))

    # -- stepping -----------------------------------------------------------

    def step(self, targets, dt: float, center_shift=(0.0, 0.0)):
        """Advance actuators one tick and emit per-finger contact fields."""
        if dt <= 0:
            raise ValueError("dt must be > 0")
        targets = as_joint_vector(targets)
        joints = self.state.joints.copy()
        max_move = self.params.actuator_speed_per_s * dt
        joints += np.clip(targets - joints, -max_move, max_move)

        # Force stall: an actuator cannot squeeze past the force cap.
        for finger in range(3):
            floor = self._stall_aperture_cm(finger) / self.params.aperture_scale_cm
            i = 2 * finger
            if 0.5 * (joints[i] + joints[i + 1]) < floor:
                joints[i] = joints[i + 1] = floor

        self._refresh(joints)
        self.state.calibration_drift += (
            self.params.drift_rate * self.layout.mass_g * self.layout.drift_multiplier
            * float(np.sum(self.state.forces_n)) * dt)

        weights = self.sensor_weights(center_shift)
        edge = self.edge_lost
        fields = tuple(
            ContactField(depths_mm=tuple((self._indentations_mm[f] * weights).tolist()),
                         edge_contact=edge)
            for f in range(3)
        )
        return self.state.copy(), fields

    def touching(self) -> np.ndarray:
        return self._overlaps_mm > 0.0

    # -- hold and slip physics ----------------------------------------------

    def grip_capacity_n(self) -> float:
        """Tangential force the grasp can resist before slipping."""
        if self.edge_lost:
            return 0.0
        return float(np.sum(self.state.forces_n)) * self.mu_effective * self.quality

    def weight_n(self, load_factor: float = 1.0) -> float:
        return self.object.total_mass_g / 1000.0 * GRAVITY * load_factor

    def hold_check(self, load_factor: float = 1.0,
                   accumulated_slip_mm: float = 0.0) -> GraspOutcome:
        """Classify the grasp under the given dynamic load."""
        if self.edge_lost:
            note = "contact displaced onto fingertip edges"
            if self.object.palm_contact_prone:
                note += "; object held against the palm"
            return GraspOutcome(GraspStatus.CONTACT_LOST, accumulated_slip_mm,
                                load_factor, note)
        if accumulated_slip_mm >= self.params.drop_threshold_mm:
            return GraspOutcome(GraspStatus.DROPPED, accumulated_slip_mm, load_factor)
        capacity = self.grip_capacity_n()
        demand = self.weight_n(load_factor)
        if capacity >= demand:
            status = GraspStatus.HELD if accumulated_slip_mm == 0.0 else GraspStatus.SLIPPED
            return GraspOutcome(status, accumulated_slip_mm, load_factor)
        if capacity == 0.0 and demand > 0.0:
            return GraspOutcome(GraspStatus.DROPPED,
                                max(accumulated_slip_mm, self.params.drop_threshold_mm),
                                load_factor, "no grip force")
        return GraspOutcome(GraspStatus.SLIPPED, accumulated_slip_mm, load_factor)

    def slip_rate_mm_per_s(self, load_factor: float = 1.0,
                           load_share: float = 1.0) -> float:
        """Slip accrual for the borne fraction of the object weight.

        ``load_share`` < 1 models the lift-off transition while the table
        still carries part of the load.
        """
        deficit = self.weight_n(load_factor) * load_share - self.grip_capacity_n()
        if deficit <= 0:
            return 0.0
        return self.params.slip_gain_mm_per_ns * deficit

    def slip_pull(self, pull_force_n: float) -> float:
        """Slip distance when the grasped object is pulled along its axis.

        Zero up to the onset force (a per-family fraction of the summed
        friction capacity), then quadratic in the excess pull. The bench
        fixture pulls through ideal contact, so the grasp-shape quality
        factor does not enter here.
        """
        if pull_force_n < 0:
            raise ValueError("pull force must be >= 0")
        onset = self.slip_onset_n()
        excess = pull_force_n - onset
        if excess <= 0:
            return 0.0
        alpha = self.params.for_kind(self.params.slip_alpha_mm_per_n, self.layout.kind)
        beta = self.params.for_kind(self.params.slip_beta_mm_per_n2, self.layout.kind)
        return alpha * excess + beta * excess ** 2

    def slip_onset_n(self) -> float:
        coeff = self.params.for_kind(self.params.slip_onset_coeff, self.layout.kind)
        return coeff * float(np.sum(self.state.forces_n)) * self.mu_effective

    # -- scripted fixtures ----------------------------------------------------

    def establish_tracking_grasp(self, tracking_force_n: float) -> HandState:
        """Close directly to a per-finger tracking force (bench fixture).

        The commanded force is capped by what full closure can generate
        against the object's compliance.
        """
        if tracking_force_n <= 0:
            raise ValueError("tracking force must be > 0")
        joints = self.state.joints.copy()
        softness = 1.0 + self.stiffness * self.compliance
        for finger in range(3):
            reach_mm = self.object.effective_radius_cm * 10.0 + self.finger_offsets_mm[finger]
            overlap = min((tracking_force_n / self.stiffness) * softness, reach_mm)
            aperture_cm = (reach_mm - overlap) / 10.0
            joints[2 * finger: 2 * finger + 2] = aperture_cm / self.params.aperture_scale_cm
        lower, upper = self.limits.lower_array, self.limits.upper_array
        self._refresh(np.clip(joints, lower, upper))
        return self.state.copy()
