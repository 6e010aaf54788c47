"""The seven-phase grasp assessment sequence.

One run walks the hand through: idle, pick-up, grasp, lift, shake,
drop-off, release. The adaptive grasp (contact-gated closure) starts with
the coarse gain during the grasp phase, switches to the fine maintenance
gain once the grasp completes, and keeps running through drop-off. A drop
or a lost contact short-circuits straight to release.

Per tick the dataflow is a fixed four-stage pipeline:

    world    -> actuators move, contact fields and carrier pose update
    frames   -> raw fingertip frames are synthesized and published
    detect   -> per-finger conditioning and the contact vector
    control  -> contact callback, phase logic, new joint targets

Two execution modes share these stages: the deterministic single-context
scheduler calls them in order, and the concurrent mode runs each stage in
its own thread around a ring of blocking queues (ownership of the run
state passes with the token, so results are identical for equal seeds).
"""

from __future__ import annotations

import math
import queue
import threading
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .bus import (
    TOPIC_CONTACT,
    TOPIC_IMU,
    TOPIC_JOINTS_ACTUAL,
    TOPIC_JOINTS_TARGET,
    TOPIC_NORMALIZED,
    TOPIC_OUTCOME,
    TOPIC_RAW,
    BusMessage,
    ContactSnapshot,
    JointSample,
    MessageBus,
    TaggedFrame,
    TaggedNormalized,
)
from .contact import ContactVector, contact_vector
from .control import adaptation_tick, as_joint_vector
from .errors import ConfigurationError
from .fingertips import synthesize_frame
from .objects import get_object
from .plant import GraspOutcome, GraspStatus, Plant
from .recording import ExperimentRecord, TickRow
from .shake import ImuSample, perturbation_pose


class Phase(IntEnum):
    IDLE = 1
    PICKUP = 2
    GRASP = 3
    LIFT = 4
    SHAKE = 5
    DROPOFF = 6
    RELEASE = 7


@dataclass
class PhaseState:
    """Current phase plus the task-dispatch lock.

    Transitions only move forward through the sequence; release wraps back
    to idle. The lock is raised while a phase's task is executing and
    cleared when the task reports done, which is what advances the phase.
    """

    phase: Phase = Phase.IDLE
    lock: bool = False

    def advance(self, to: Phase):
        if to is Phase.IDLE and self.phase is Phase.RELEASE:
            self.phase = to
            self.lock = False
            return
        if to <= self.phase:
            raise ConfigurationError(f"phase cannot move backward: {self.phase} -> {to}")
        self.phase = to
        self.lock = True


@dataclass(frozen=True)
class PreGrasp:
    """A stored hand posture used as the starting configuration."""

    name: str
    offsets: tuple[float, ...]


def select_pregrasp(object_name: str, config) -> PreGrasp:
    """Fixed object-to-pregrasp mapping, read from configuration."""
    section = config.section("sequence")
    mapping = section["pregrasp_map"]
    if object_name not in mapping:
        raise LookupError(f"no pre-grasp mapped for object {object_name!r}")
    name = mapping[object_name]
    offsets = tuple(float(v) for v in section["pregrasp_offsets"][name])
    limits = config.joint_limits()
    if not limits.contains(as_joint_vector(offsets)):
        raise ConfigurationError(f"pre-grasp {name} offsets leave the joint limits")
    return PreGrasp(name=name, offsets=offsets)


class GraspSequenceEngine:
    """Single-owner state machine for one assessment run."""

    def __init__(self, object_name: str, kind, config, seed: int = 0, *,
                 added_mass_g: float = 0.0, record_rows: bool = True,
                 fast_outcome: bool | None = None, request: bool = True,
                 idle_ticks: int = 0, bus: MessageBus | None = None,
                 keep_messages: bool | None = None):
        self.config = config
        self.object = get_object(object_name).with_added_mass(added_mass_g)
        self.layout = config.layout(kind)
        self.kind = self.layout.kind
        self.seed = int(seed)
        self.limits = config.joint_limits()
        self.plant = Plant(self.object, self.layout, config.plant_params(),
                           self.limits, seed=self.seed)
        self.pipelines = [config.pipeline(kind) for _ in range(3)]
        self.contact_config = config.contact_config(kind)
        self.profile = config.perturbation_profile()
        self.bus = bus if bus is not None else MessageBus()
        self.snapshot = ContactSnapshot()

        control = config.section("control")
        self.dt = 1.0 / float(control["tick_hz"])
        self.kp_close = float(control["kp_close"])
        self.kp_hold = float(control["kp_hold"])
        self.grasp_timeout_ticks = self._ticks(float(control["grasp_timeout_s"]))

        sequence = config.section("sequence")
        self.pickup_ticks = self._ticks(float(sequence["pickup_s"]))
        self.lift_ticks = self._ticks(float(sequence["lift_s"]))
        self.dropoff_ticks = self._ticks(float(sequence["dropoff_s"]))
        self.release_ticks = self._ticks(float(sequence["release_s"]))
        self.shake_ticks = self._ticks(self.profile.duration_s)
        self.imu_noise_sigma = float(config.section("shake")["imu_noise_sigma_deg"])

        self.pregrasp = select_pregrasp(object_name, config)
        self._pregrasp_array = np.asarray(self.pregrasp.offsets, dtype=np.float64)
        self.request = request
        self.idle_ticks = int(idle_ticks)
        self.record_rows = record_rows
        self.fast_outcome = (not record_rows) if fast_outcome is None else fast_outcome
        self.keep_messages = record_rows if keep_messages is None else keep_messages
        # with no recorder and no external bus there is nobody to deliver to,
        # so the hot loop skips everything except the outcome record
        self._telemetry = self.keep_messages or bus is not None
        self._noise_rngs = [np.random.default_rng((self.seed, finger, 0xA9))
                            for finger in range(3)] if self.layout.noise_sigma > 0 else None

        # run state
        self.phase_state = PhaseState()
        self.tick = 0
        self.phase_entry_tick = 0
        self.targets = self.limits.upper_array.copy()
        self.min_detector = np.zeros(3, dtype=bool)
        self.touched = np.zeros(3, dtype=bool)
        self.slip_mm = 0.0
        self.peak_load_factor = 1.0
        self.outcome: GraspOutcome | None = None
        self.done = False
        self.limit_violations = 0
        self.messages: list[BusMessage] = []
        self.record = ExperimentRecord(
            run_id=f"{object_name.replace(' ', '_')}-{self.kind.value}"
                   f"-{int(self.object.total_mass_g)}g-seed{self.seed}",
            object_name=object_name,
            kind=self.kind.value,
            added_mass_g=float(added_mass_g),
            seed=self.seed,
            config_digest=config.digest(),
        )

        # per-tick scratch shared between stages
        self._pose_yaw = 0.0
        self._pose_pitch = 0.0
        self._load_factor = 1.0
        self._fields = None
        self._frames = None
        self._normalized = None
        self._contact = ContactVector.none()
        self._row_phase = Phase.IDLE

    # -- helpers --------------------------------------------------------------

    def _ticks(self, seconds: float) -> int:
        return max(1, math.ceil(seconds / (1.0 / float(self.config.section("control")["tick_hz"]))))

    def _timestamp_us(self) -> int:
        return round(self.tick * self.dt * 1e6)

    def _publish(self, topic: str, payload):
        if not self._telemetry and topic != TOPIC_OUTCOME:
            return
        message = self.bus.publish(topic, payload, self._timestamp_us())
        if self.keep_messages:
            self.messages.append(message)

    def _phase_elapsed(self) -> int:
        return self.tick - self.phase_entry_tick

    def _enter(self, phase: Phase):
        self.phase_state.advance(phase)
        self.phase_entry_tick = self.tick

    @property
    def carrying(self) -> bool:
        return self.phase_state.phase in (Phase.LIFT, Phase.SHAKE, Phase.DROPOFF)

    # -- pipeline stages --------------------------------------------------------

    def stage_world(self):
        """Move actuators toward the current targets; update the carrier pose."""
        phase = self.phase_state.phase
        self._row_phase = phase
        if phase is Phase.SHAKE:
            t_rel = min(self._phase_elapsed() * self.dt, self.profile.duration_s)
            pose = perturbation_pose(self.profile, t_rel)
            self._pose_yaw, self._pose_pitch = pose.yaw_deg, pose.pitch_deg
            self._load_factor = pose.load_factor
        else:
            self._pose_yaw = self._pose_pitch = 0.0
            self._load_factor = 1.0

        shift_scale = self.plant.params.center_coupling / self.profile.amplitude_deg
        center_shift = (self._pose_yaw * shift_scale, self._pose_pitch * shift_scale)
        state, self._fields = self.plant.step(self.targets, self.dt, center_shift)
        if self._telemetry:
            self._publish(TOPIC_JOINTS_ACTUAL, JointSample(tuple(state.joints.tolist())))
            timestamp = self._timestamp_us()
            rng = np.random.default_rng((self.seed, timestamp, 0xF1))
            noise = rng.normal(0.0, self.imu_noise_sigma, size=2)
            self._publish(TOPIC_IMU, ImuSample(timestamp_us=timestamp,
                                               yaw_deg=self._pose_yaw + noise[0],
                                               pitch_deg=self._pose_pitch + noise[1]))

    def stage_frames(self):
        """Synthesize and publish one raw frame per finger."""
        timestamp = self._timestamp_us()
        self._frames = []
        for finger in range(3):
            rng = self._noise_rngs[finger] if self._noise_rngs is not None else None
            frame = synthesize_frame(self.layout, self._fields[finger], timestamp, rng=rng)
            self._frames.append(frame)
            if self._telemetry:
                self._publish(TOPIC_RAW, TaggedFrame(finger=finger, frame=frame))

    def stage_detect(self):
        """Condition the frames and derive the contact vector."""
        self._normalized = [pipe.process(frame)
                            for pipe, frame in zip(self.pipelines, self._frames)]
        self._contact = contact_vector(self._normalized, self.contact_config)
        if self._telemetry:
            for finger, nframe in enumerate(self._normalized):
                self._publish(TOPIC_NORMALIZED, TaggedNormalized(finger=finger, frame=nframe))
            self._publish(TOPIC_CONTACT, self._contact)

    def stage_control(self):
        """Contact callback, hold monitoring, phase logic, new targets."""
        self.snapshot.set(self._contact)
        phase = self.phase_state.phase
        contact = self.snapshot.get()

        if self.carrying:
            self._monitor_hold()

        if phase is Phase.IDLE:
            self.targets = self.limits.upper_array.copy()
            if self.request and self.tick >= self.idle_ticks:
                self._enter(Phase.PICKUP)
                self.targets = self._pregrasp_array.copy()

        elif phase is Phase.PICKUP:
            self.targets = self._pregrasp_array.copy()
            if self._phase_elapsed() >= self.pickup_ticks:
                self.touched[:] = False
                self.min_detector[:] = False
                self._enter(Phase.GRASP)

        elif phase is Phase.GRASP:
            self.touched |= np.fromiter(contact, dtype=bool, count=3)
            self.targets, self.min_detector = adaptation_tick(
                contact, self.min_detector, self.plant.state.joints, self.limits, self.kp_close)
            if np.all(self.touched | self.min_detector):
                self._enter(Phase.LIFT)
            elif self._phase_elapsed() >= self.grasp_timeout_ticks:
                self._abort(GraspOutcome(GraspStatus.DROPPED,
                                         self.plant.params.drop_threshold_mm,
                                         self.peak_load_factor, "grasp timed out"))

        elif phase in (Phase.LIFT, Phase.SHAKE, Phase.DROPOFF):
            if self.outcome is None:
                self.targets, self.min_detector = adaptation_tick(
                    contact, self.min_detector, self.plant.state.joints, self.limits, self.kp_hold)
                if phase is Phase.LIFT and self._phase_elapsed() >= self.lift_ticks:
                    self._enter(Phase.SHAKE)
                elif phase is Phase.SHAKE:
                    if self.fast_outcome and self._shake_settled():
                        self.peak_load_factor = max(self.peak_load_factor,
                                                    self.profile.peak_load_factor)
                        self._enter(Phase.DROPOFF)
                    elif self._phase_elapsed() >= self.shake_ticks:
                        self._enter(Phase.DROPOFF)
                elif phase is Phase.DROPOFF and self._phase_elapsed() >= self.dropoff_ticks:
                    # final verdict before the hand opens
                    verdict = self.plant.hold_check(1.0, self.slip_mm)
                    self.outcome = replace(verdict, peak_load_factor=self.peak_load_factor)
                    self._enter(Phase.RELEASE)

        elif phase is Phase.RELEASE:
            self.targets = self._pregrasp_array.copy()
            if self._phase_elapsed() >= self.release_ticks:
                if self.outcome is None:
                    self.outcome = self.plant.hold_check(1.0, self.slip_mm)
                self._finish()

        self._validate_targets()
        self._publish(TOPIC_JOINTS_TARGET, JointSample(tuple(np.asarray(self.targets).tolist())))
        if self.record_rows:
            self.record.rows.append(TickRow(
                timestamp_us=self._timestamp_us(),
                phase=int(self._row_phase),
                joints_actual=tuple(self.plant.state.joints.tolist()),
                joints_target=tuple(np.asarray(self.targets).tolist()),
                contact=tuple(self._contact.flags),
                normalized=tuple(tuple(float(v) for v in n.values) for n in self._normalized),
                yaw_deg=float(self._pose_yaw),
                pitch_deg=float(self._pose_pitch),
                load_factor=float(self._load_factor),
            ))
        self.tick += 1

    # -- monitoring -------------------------------------------------------------

    def _monitor_hold(self):
        self.peak_load_factor = max(self.peak_load_factor, self._load_factor)
        if self.plant.edge_lost:
            outcome = self.plant.hold_check(self._load_factor, self.slip_mm)
            self._abort(replace(outcome, peak_load_factor=self.peak_load_factor))
            return
        # the table carries a shrinking share of the weight while lifting off
        if self.phase_state.phase is Phase.LIFT:
            load_share = min(1.0, self._phase_elapsed() / self.lift_ticks)
        else:
            load_share = 1.0
        self.slip_mm += self.plant.slip_rate_mm_per_s(self._load_factor, load_share) * self.dt
        if self.slip_mm >= self.plant.params.drop_threshold_mm:
            self.slip_mm = max(self.slip_mm, self.plant.params.drop_threshold_mm)
            self._abort(GraspOutcome(GraspStatus.DROPPED, self.slip_mm, self.peak_load_factor))

    def _shake_settled(self) -> bool:
        """Outcome already decided: grip covers the worst-case dynamic load.

        Fingertip forces never decrease while holding (targets only close),
        so once the margin covers the peak load factor no further slip can
        accrue and the run may skip the rest of the shake.
        """
        worst = self.plant.weight_n(self.profile.peak_load_factor)
        return self.plant.grip_capacity_n() >= worst

    def _abort(self, outcome: GraspOutcome):
        self.outcome = outcome
        if self.phase_state.phase is not Phase.RELEASE:
            self._enter(Phase.RELEASE)
        self.targets = self._pregrasp_array.copy()

    def _finish(self):
        self.phase_state.advance(Phase.IDLE)
        self.record.outcome = self.outcome
        self._publish(TOPIC_OUTCOME, self.outcome)
        self.done = True

    def _validate_targets(self):
        # emitted targets must never leave the joint limits; checked every tick
        if not self.limits.contains(np.asarray(self.targets)):
            self.limit_violations += 1
            raise RuntimeError(
                f"joint target left its limits at tick {self.tick}: {self.targets}")

    # -- run loops ---------------------------------------------------------------

    def max_ticks(self) -> int:
        budget = (self.idle_ticks + self.pickup_ticks + self.grasp_timeout_ticks
                  + self.lift_ticks + self.shake_ticks + self.dropoff_ticks
                  + self.release_ticks)
        return budget + self._ticks(2.0)

    def tick_once(self):
        self.stage_world()
        self.stage_frames()
        self.stage_detect()
        self.stage_control()

    def run(self):
        """Deterministic single-context scheduler."""
        limit = self.max_ticks()
        while not self.done and self.tick < limit:
            self.tick_once()
        return self.outcome, self.record

    def run_threaded(self):
        """Concurrent mode: the four stages in independent threads.

        Ownership of the engine state passes around a ring of blocking
        queues, so the dataflow order per tick is identical to the
        single-context scheduler and the outcomes match bit for bit.
        """
        stages = [self.stage_world, self.stage_frames, self.stage_detect, self.stage_control]
        ring = [queue.Queue(maxsize=1) for _ in stages]

        def worker(index: int):
            while True:
                token = ring[index].get()
                if token is None:
                    if index + 1 < len(stages):
                        ring[index + 1].put(None)
                    return
                stages[index]()
                if index + 1 < len(stages):
                    ring[index + 1].put(token)
                else:
                    limit = self.max_ticks()
                    if self.done or self.tick >= limit:
                        ring[0].put(None)
                    else:
                        ring[0].put(token)

        threads = [threading.Thread(target=worker, args=(i,), name=f"stage-{i}")
                   for i in range(len(stages))]
        for thread in threads:
            thread.start()
        ring[0].put(object())
        for thread in threads:
            thread.join()
        return self.outcome, self.record


def run_main_sequence(object_name: str, kind, config, seed: int = 0, *,
                      added_mass_g: float = 0.0, mode: str = "single",
                      record_rows: bool = True, fast_outcome: bool | None = None,
                      request: bool = True, idle_ticks: int = 0,
                      bus: MessageBus | None = None):
    """Execute one full assessment run and return (outcome, record)."""
    engine = GraspSequenceEngine(object_name, kind, config, seed,
                                 added_mass_g=added_mass_g, record_rows=record_rows,
                                 fast_outcome=fast_outcome, request=request,
                                 idle_ticks=idle_ticks, bus=bus)
    if mode == "single":
        return engine.run()
    if mode == "threaded":
        return engine.run_threaded()
    raise ConfigurationError(f"unknown execution mode {mode!r}")
