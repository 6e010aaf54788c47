"""Configuration: defaults, YAML overlay, environment overrides.

Every tunable default in the package lives here. Loading order is
defaults -> packaged calibrated defaults -> user YAML file -> environment
variables, later layers winning. Environment overrides use the prefix
``GRASPSIM_`` with ``__`` separating nesting levels, e.g.

    GRASPSIM_CONTROL__TICK_HZ=100
    GRASPSIM_CONTACT__BIOTAC__THRESHOLD=75

Values are parsed as YAML scalars, so numbers, booleans and inline
mappings all work.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from importlib import resources

import yaml

from .contact import ContactConfig
from .control import JointLimits
from .errors import ConfigurationError
from .fingertips import FingertipKind, SensorLayout, layout_for
from .filtering import Pipeline, pipeline_for
from .plant import Plant, PlantParams
from .objects import ObjectSpec, get_object
from .shake import PerturbationProfile

ENV_PREFIX = "GRASPSIM_"
CALIBRATED_DEFAULTS_RESOURCE = "calibrated_defaults.yaml"


def _default_tree() -> dict:
    return {
        "fingertips": {
            "biotac": {
                "delta_min_mm": 5.0,
                "gain_counts_per_mm": 400.0,
                "noise_sigma": 8.0,
                "friction_mu": 1.0,
                "edge_sensitive": True,
                "mass_g": 9.5,
                "drift_multiplier": 1.0,
            },
            "wts": {
                "delta_min_mm": 30.0,
                "gain_counts_per_mm": 400.0,
                "noise_sigma": 0.0,
                "friction_mu": 0.6,
                "edge_sensitive": False,
                "mass_g": 25.8,
                "drift_multiplier": 3.7,
            },
        },
        "pipeline": {
            "retention": 0.8,
            "delta_cap": 200.0,
            # which stream feeds contact detection, per family
            "biotac_mode": "filtered",
            "wts_mode": "passthrough",
        },
        "contact": {
            "biotac": {"threshold": 60.0, "min_active": 5},
            "wts": {"threshold": 1229.0, "min_active": 3},
        },
        "control": {
            "kp_close": 0.04,
            "kp_hold": 0.01,
            "tick_hz": 50.0,
            "actuator_speed_per_s": 0.6,
            "joint_lower": 0.0,
            "joint_upper": 1.0,
            "grasp_timeout_s": 6.0,
        },
        "plant": {
            "stiffness_n_per_mm": {"biotac": 1.2, "wts": 0.185},
            "force_cap_n": {"biotac": 10.0, "wts": 7.0},
            "aperture_scale_cm": 12.0,
            "contact_sigma": 0.30,
            "center_coupling": 0.04,
            "slip_gain_mm_per_ns": 60.0,
            "drop_threshold_mm": 20.0,
            "placement_jitter_mm": 2.0,
            "slip_onset_coeff": {"biotac": 1.0, "wts": 0.7},
            "slip_alpha_mm_per_n": {"biotac": 0.8, "wts": 1.2},
            "slip_beta_mm_per_n2": {"biotac": 0.05, "wts": 0.15},
            "drift_rate": 1.0e-6,
            "object_friction": {},
            "object_compliance": {},
            "grip_quality": {},
        },
        "shake": {
            "base_speed_rad_s": 0.1,
            "peak_speed_rad_s": 0.13,
            "amplitude_deg": 10.0,
            "yaw_cycles": 2,
            "pitch_cycles": 2,
            "ramp_up_s": 2.0,
            "ramp_down_s": 2.0,
            "lever_arm_m": 0.3,
            "imu_noise_sigma_deg": 0.1,
        },
        "sequence": {
            "pickup_s": 0.5,
            "lift_s": 1.0,
            "dropoff_s": 0.5,
            "release_s": 0.3,
            "pregrasp_map": {
                "can": "large_diameter",
                "water bottle": "large_diameter",
                "tea cup": "precision_sphere",
                "cube box": "precision_disk",
                "plastic cup": "sphere_3_fingers",
            },
            "pregrasp_offsets": {
                "sphere_3_fingers": [0.85, 0.85, 0.85, 0.85, 0.85, 0.85],
                "large_diameter": [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
                "precision_disk": [0.7, 0.7, 0.7, 0.7, 0.7, 0.7],
                "precision_sphere": [0.75, 0.75, 0.75, 0.75, 0.75, 0.75],
            },
        },
        "sweep": {
            "reps": 10,
            "increment_g": 10,
            "fail_threshold": 5,
            "max_added_g": 3000,
        },
        "touch": {
            "step_mm": 0.5,
            "max_depth_mm": 50.0,
        },
        "slip_test": {
            "tracking_force_n": 30.0,
            "force_step_n": 1.0,
            "margin_n": 25.0,
        },
        "colormap": {
            "biotac_grid_rows": 6,
            "biotac_grid_cols": 6,
        },
    }


def _deep_merge(base: dict, overlay: dict) -> dict:
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_merge(base[key], value)
        else:
            base[key] = copy.deepcopy(value)
    return base


@dataclass(frozen=True)
class Config:
    """Validated configuration tree with typed accessors."""

    tree: dict

    def section(self, name: str) -> dict:
        try:
            return self.tree[name]
        except KeyError:
            raise ConfigurationError(f"unknown config section {name!r}") from None

    def digest(self) -> str:
        canonical = json.dumps(self.tree, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.tree, sort_keys=True)

    # -- builders ------------------------------------------------------------

    def layout(self, kind: FingertipKind | str, **overrides) -> SensorLayout:
        kind = FingertipKind(kind)
        settings = dict(self.section("fingertips")[kind.value])
        settings.update(overrides)
        return layout_for(kind, **settings)

    def pipeline(self, kind: FingertipKind | str) -> Pipeline:
        kind = FingertipKind(kind)
        section = self.section("pipeline")
        mode = section["biotac_mode"] if kind is FingertipKind.BIOTAC_SP else section["wts_mode"]
        return pipeline_for(kind, retention=section["retention"],
                            delta_cap=section["delta_cap"], mode=mode)

    def contact_config(self, kind: FingertipKind | str) -> ContactConfig:
        kind = FingertipKind(kind)
        entry = self.section("contact")[kind.value]
        return ContactConfig(kind=kind, activation_threshold=float(entry["threshold"]),
                             min_active_count=int(entry["min_active"]))

    def joint_limits(self) -> JointLimits:
        control = self.section("control")
        return JointLimits(lower=(float(control["joint_lower"]),) * 6,
                           upper=(float(control["joint_upper"]),) * 6)

    def plant_params(self) -> PlantParams:
        plant = self.section("plant")
        control = self.section("control")
        return PlantParams(
            stiffness_n_per_mm=dict(plant["stiffness_n_per_mm"]),
            force_cap_n=dict(plant["force_cap_n"]),
            actuator_speed_per_s=float(control["actuator_speed_per_s"]),
            aperture_scale_cm=float(plant["aperture_scale_cm"]),
            contact_sigma=float(plant["contact_sigma"]),
            center_coupling=float(plant["center_coupling"]),
            slip_gain_mm_per_ns=float(plant["slip_gain_mm_per_ns"]),
            drop_threshold_mm=float(plant["drop_threshold_mm"]),
            placement_jitter_mm=float(plant["placement_jitter_mm"]),
            slip_onset_coeff=dict(plant["slip_onset_coeff"]),
            slip_alpha_mm_per_n=dict(plant["slip_alpha_mm_per_n"]),
            slip_beta_mm_per_n2=dict(plant["slip_beta_mm_per_n2"]),
            drift_rate=float(plant["drift_rate"]),
            object_friction=dict(plant["object_friction"]),
            object_compliance=dict(plant["object_compliance"]),
            grip_quality=dict(plant["grip_quality"]),
        )

    def plant(self, object_spec: ObjectSpec | str, kind: FingertipKind | str, seed=0,
              added_mass_g: float = 0.0) -> Plant:
        if isinstance(object_spec, str):
            object_spec = get_object(object_spec)
        if added_mass_g:
            object_spec = object_spec.with_added_mass(added_mass_g)
        return Plant(object_spec, self.layout(kind), self.plant_params(),
                     self.joint_limits(), seed=seed)

    def perturbation_profile(self) -> PerturbationProfile:
        shake = self.section("shake")
        return PerturbationProfile(
            base_speed_rad_s=float(shake["base_speed_rad_s"]),
            peak_speed_rad_s=float(shake["peak_speed_rad_s"]),
            amplitude_deg=float(shake["amplitude_deg"]),
            yaw_cycles=int(shake["yaw_cycles"]),
            pitch_cycles=int(shake["pitch_cycles"]),
            ramp_up_s=float(shake["ramp_up_s"]),
            ramp_down_s=float(shake["ramp_down_s"]),
            lever_arm_m=float(shake["lever_arm_m"]),
        )

    def with_overrides(self, overlay: dict) -> "Config":
        tree = copy.deepcopy(self.tree)
        _deep_merge(tree, overlay)
        return Config(tree)


def default_config() -> Config:
    """Package defaults without the calibrated overlay."""
    return Config(_default_tree())


def _calibrated_overlay() -> dict | None:
    try:
        data = resources.files("graspsim").joinpath("data").joinpath(CALIBRATED_DEFAULTS_RESOURCE)
        text = data.read_text()
    except (FileNotFoundError, ModuleNotFoundError):
        return None
    return yaml.safe_load(text) or {}


def _env_overlay(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    overlay: dict = {}
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        path = [part.lower() for part in name[len(ENV_PREFIX):].split("__") if part]
        if not path:
            continue
        node = overlay
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = yaml.safe_load(raw)
    return overlay


def load_config(path: str | None = None, *, calibrated: bool = True,
                env: bool = True, environ=None) -> Config:
    """Assemble the effective configuration.

    ``calibrated=False`` skips the packaged calibrated overlay and yields
    the raw pre-calibration defaults.
    """
    tree = _default_tree()
    if calibrated:
        overlay = _calibrated_overlay()
        if overlay:
            _deep_merge(tree, overlay)
    if path is not None:
        with open(path, "r", encoding="utf-8") as handle:
            user = yaml.safe_load(handle) or {}
        if not isinstance(user, dict):
            raise ConfigurationError(f"config file {path} must contain a mapping")
        _deep_merge(tree, user)
    if env:
        _deep_merge(tree, _env_overlay(environ))
    return Config(tree)
