"""Shake perturbation kinematics and the wrist IMU.

The perturbation is a fixed sequence: the carrier speed ramps from the
base to the peak angular speed, the wrist performs two full sinusoidal
oscillations in yaw then two in pitch at a 10 degree amplitude, and the
speed ramps back down. Within an oscillation the angle is

    theta(tau) = A * sin(omega * tau),  omega = peak_speed / A

so the peak angular speed of the sinusoid equals the commanded peak
speed. The dynamic load factor follows the tangential acceleration at
the hand's lever arm:

    lambda(t) = 1 + lever_arm * |theta_dd(t)| / g

whose closed-form peak is 1 + lever_arm * A * omega^2 / g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GRAVITY = 9.81  # m/s^2


@dataclass(frozen=True)
class PerturbationProfile:
    base_speed_rad_s: float = 0.1
    peak_speed_rad_s: float = 0.13
    amplitude_deg: float = 10.0
    yaw_cycles: int = 2
    pitch_cycles: int = 2
    ramp_up_s: float = 2.0
    ramp_down_s: float = 2.0
    lever_arm_m: float = 0.3

    @property
    def amplitude_rad(self) -> float:
        return math.radians(self.amplitude_deg)

    @property
    def omega(self) -> float:
        """Angular frequency of the oscillation sinusoid (rad/s)."""
        return self.peak_speed_rad_s / self.amplitude_rad

    @property
    def cycle_period_s(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def yaw_start_s(self) -> float:
        return self.ramp_up_s

    @property
    def pitch_start_s(self) -> float:
        return self.ramp_up_s + self.yaw_cycles * self.cycle_period_s

    @property
    def oscillation_end_s(self) -> float:
        return self.pitch_start_s + self.pitch_cycles * self.cycle_period_s

    @property
    def duration_s(self) -> float:
        return self.oscillation_end_s + self.ramp_down_s

    @property
    def peak_load_factor(self) -> float:
        accel = self.lever_arm_m * self.amplitude_rad * self.omega ** 2
        return 1.0 + accel / GRAVITY


@dataclass(frozen=True)
class PoseSample:
    yaw_deg: float
    pitch_deg: float
    speed_rad_s: float      # commanded speed envelope
    load_factor: float


@dataclass(frozen=True)
class ImuSample:
    timestamp_us: int
    yaw_deg: float
    pitch_deg: float


def perturbation_pose(profile: PerturbationProfile, t_s: float) -> PoseSample:
    """Carrier pose, speed envelope and load factor at time ``t_s``."""
    if t_s < 0 or t_s > profile.duration_s:
        raise ValueError(
            f"t={t_s} outside the perturbation profile [0, {profile.duration_s:.3f}]")

    base, peak = profile.base_speed_rad_s, profile.peak_speed_rad_s
    amp = profile.amplitude_deg
    omega = profile.omega

    if t_s < profile.yaw_start_s:
        frac = t_s / profile.ramp_up_s if profile.ramp_up_s > 0 else 1.0
        return PoseSample(0.0, 0.0, base + (peak - base) * frac, 1.0)

    if t_s < profile.pitch_start_s:
        tau = t_s - profile.yaw_start_s
        return PoseSample(amp * math.sin(omega * tau), 0.0, peak,
                          _oscillation_load_factor(profile, tau))

    if t_s < profile.oscillation_end_s:
        tau = t_s - profile.pitch_start_s
        return PoseSample(0.0, amp * math.sin(omega * tau), peak,
                          _oscillation_load_factor(profile, tau))

    frac = ((t_s - profile.oscillation_end_s) / profile.ramp_down_s
            if profile.ramp_down_s > 0 else 1.0)
    return PoseSample(0.0, 0.0, peak - (peak - base) * frac, 1.0)


def _oscillation_load_factor(profile: PerturbationProfile, tau: float) -> float:
    accel = (profile.lever_arm_m * profile.amplitude_rad * profile.omega ** 2
             * abs(math.sin(profile.omega * tau)))
    return 1.0 + accel / GRAVITY


def imu_read(profile: PerturbationProfile, t_s: float, seed=0,
             noise_sigma_deg: float = 0.1) -> ImuSample:
    """Noisy wrist IMU sample; zero angles outside the shake window.

    The noise draw is a pure function of (seed, timestamp), so a replayed
    trace is identical sample for sample.
    """
    if t_s < 0:
        raise ValueError("IMU time must be >= 0")
    timestamp_us = round(t_s * 1e6)
    if t_s <= profile.duration_s:
        pose = perturbation_pose(profile, t_s)
        yaw, pitch = pose.yaw_deg, pose.pitch_deg
    else:
        yaw, pitch = 0.0, 0.0
    rng = np.random.default_rng((seed, timestamp_us))
    noise = rng.normal(0.0, noise_sigma_deg, size=2)
    return ImuSample(timestamp_us=timestamp_us,
                     yaw_deg=yaw + noise[0], pitch_deg=pitch + noise[1])
