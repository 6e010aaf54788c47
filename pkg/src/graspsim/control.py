"""Proportional grasp controller and the joint-target clamping rule.

The hand has 6 joints (two per finger, thumb/index/ring), expressed in
normalised actuator units where the lower limit is the fully closed
direction. Closure advances by a fixed per-tick decrement (the gain),
which is the proportional law with the set point at the closed limit and
a sign-normalised error: decrement = gain * sign(setpoint - actual).
Joints in contact hold their actual position; joints out of contact are
clamped into their limits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

JOINT_COUNT = 6
FINGER_COUNT = 3

DEFAULT_KP_CLOSE = 0.04   # initial closure gain, per 50 Hz tick
DEFAULT_KP_HOLD = 0.01    # maintenance gain after the grasp completes


@dataclass(frozen=True)
class ControllerParams:
    """Proportional controller parameters and the two-stage gain schedule."""

    kp: float
    p0: float = 0.0
    setpoint: float = 0.0
    kp_close: float = DEFAULT_KP_CLOSE
    kp_hold: float = DEFAULT_KP_HOLD

    def __post_init__(self):
        if self.kp < 0:
            raise ConfigurationError("kp must be >= 0")
        if not self.kp_close >= self.kp_hold > 0:
            raise ConfigurationError("gain schedule requires kp_close >= kp_hold > 0")


@dataclass(frozen=True)
class JointLimits:
    """Per-joint travel bounds; ``lower`` is the fully closed direction."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != JOINT_COUNT or len(self.upper) != JOINT_COUNT:
            raise ConfigurationError(f"joint limits need {JOINT_COUNT} entries per bound")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ConfigurationError("every joint needs lower < upper")

    @property
    def lower_array(self) -> np.ndarray:
        return np.asarray(self.lower, dtype=np.float64)

    @property
    def upper_array(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=np.float64)

    def contains(self, joints: np.ndarray) -> bool:
        return bool(np.all(joints >= self.lower_array) and np.all(joints <= self.upper_array))


def unit_limits() -> JointLimits:
    return JointLimits(lower=(0.0,) * JOINT_COUNT, upper=(1.0,) * JOINT_COUNT)


def as_joint_vector(values) -> np.ndarray:
    joints = np.asarray(values, dtype=np.float64)
    if joints.shape != (JOINT_COUNT,):
        raise ConfigurationError(f"joint vector must have shape ({JOINT_COUNT},)")
    if not np.all(np.isfinite(joints)):
        raise ConfigurationError("joint vector must be finite")
    return joints


def p_controller(setpoint, measured, kp, p0):
    """Plain proportional law: output = kp * (setpoint - measured) + p0."""
    out = kp * (np.asarray(setpoint, dtype=np.float64) - measured) + p0
    return float(out) if np.ndim(out) == 0 else out


def clamp_target(p_out, limits: JointLimits, contact, actual):
    """Gate controller output through the contact state and joint limits.

    Per joint: with no contact the output passes clamped into
    [lower, upper]; with contact the target holds the actual position.
    """
    p_out = np.asarray(p_out, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    contact = np.asarray(contact, dtype=bool)
    lower, upper = limits.lower_array, limits.upper_array
    if p_out.ndim == 0:
        lower, upper = lower[0], upper[0]
    out = np.where(contact, actual, np.clip(p_out, lower, upper))
    return float(out) if out.ndim == 0 else out


def finger_contact_to_joints(contact) -> np.ndarray:
    """Expand per-finger contact flags to the 6-joint layout (2 per finger)."""
    flags = np.asarray(list(contact), dtype=bool)
    if flags.shape != (FINGER_COUNT,):
        raise ConfigurationError(f"need {FINGER_COUNT} contact flags")
    return np.repeat(flags, 2)


def closing_step(actual, kp: float, min_position):
    """One fixed-decrement closure step toward the fully closed limit.

    Returns (next_position, at_min). The position decrements by ``kp``
    while that stays at or above the limit, otherwise it pins to the
    limit and raises the at-min flag.
    """
    if kp <= 0:
        raise ConfigurationError("closing gain must be > 0")
    actual = np.asarray(actual, dtype=np.float64)
    min_position = np.asarray(min_position, dtype=np.float64)
    stepped = actual - kp
    at_min = stepped < min_position
    nxt = np.where(at_min, min_position, stepped)
    if nxt.ndim == 0:
        return float(nxt), bool(at_min)
    return nxt, at_min


def grasp_complete(targets, limits: JointLimits, actuals, contact, min_detector) -> bool:
    """True when every joint target sits at a limit or at the actual position.

    Equivalently: every finger is either holding contact or pinned at a
    travel limit, so no joint has an outstanding move.
    """
    targets = as_joint_vector(targets)
    actuals = as_joint_vector(actuals)
    joint_ok = (
        (targets == limits.lower_array)
        | (targets == limits.upper_array)
        | (targets == actuals)
    )
    finger_ok = np.asarray(list(contact), dtype=bool) | np.asarray(list(min_detector), dtype=bool)
    return bool(np.all(joint_ok | np.repeat(finger_ok, 2)))


def adaptation_tick(contact, min_detector, actual, limits: JointLimits, kp: float):
    """One pass of the continuous grasp adaptation.

    Fingers in contact hold their actual joints; fingers already flagged
    at the closed limit hold that limit; everything else advances one
    closing step. Returns the full 6-joint target vector and the updated
    per-finger at-min flags.
    """
    if kp <= 0:
        raise ConfigurationError("closing gain must be > 0")
    actual = as_joint_vector(actual)
    contact_flags = np.fromiter(contact, dtype=bool, count=FINGER_COUNT)
    min_flags = np.fromiter(min_detector, dtype=bool, count=FINGER_COUNT)

    lower = limits.lower_array
    contact_joints = np.repeat(contact_flags, 2)
    pinned_joints = np.repeat(min_flags, 2)
    stepped = actual - kp
    hit_min = stepped < lower
    closing = np.where(hit_min, lower, stepped)
    targets = np.where(contact_joints, actual, np.where(pinned_joints, lower, closing))
    reached = (hit_min.reshape(FINGER_COUNT, 2).all(axis=1)
               & ~contact_flags & ~min_flags)
    return targets, min_flags | reached
