"""Threshold-based contact detection and the three-finger contact vector.

A sensor is active when its conditioned value reaches the activation
threshold; a finger is in contact when at least ``min_active_count``
sensors are active at once. The per-finger decisions form an immutable
3-element Boolean vector (thumb, index, ring) that is always published
as a whole value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigurationError
from .fingertips import FINGER_NAMES, FingertipKind, layout_for
from .filtering import NormalizedFrame

# Composite weighting of the threshold calibration criteria. Grasp
# efficiency dominates; deformation and slip split the remainder.
DEFORMATION_WEIGHT = 0.25
EFFICIENCY_WEIGHT = 0.5
SLIP_WEIGHT = 0.25


@dataclass(frozen=True)
class ContactConfig:
    """Detection parameters for one device family."""

    kind: FingertipKind
    activation_threshold: float
    min_active_count: int

    def __post_init__(self):
        if self.activation_threshold < 0:
            raise ConfigurationError("activation_threshold must be >= 0")
        channels = layout_for(self.kind).channel_count
        if not 1 <= self.min_active_count <= channels:
            raise ConfigurationError(
                f"min_active_count must be within [1, {channels}], got {self.min_active_count}")


def default_contact_config(kind: FingertipKind | str) -> ContactConfig:
    """Pre-calibration defaults: threshold at 30% of the working full scale.

    BIOTAC_SP detects on normalised deltas (cap 200), WTS_FT on raw
    counts (full scale 4095). The calibrated config shipped with the
    package freezes these to tuned raw counts.
    """
    kind = FingertipKind(kind)
    if kind is FingertipKind.BIOTAC_SP:
        return ContactConfig(kind=kind, activation_threshold=60.0, min_active_count=5)
    return ContactConfig(kind=kind, activation_threshold=1229.0, min_active_count=3)


@dataclass(frozen=True)
class ContactVector:
    """Per-finger contact state, replaced wholesale, never field by field."""

    flags: tuple[bool, bool, bool]

    def __post_init__(self):
        if len(self.flags) != 3:
            raise ConfigurationError("contact vector has exactly 3 entries")

    @property
    def thumb(self) -> bool:
        return self.flags[0]

    @property
    def index(self) -> bool:
        return self.flags[1]

    @property
    def ring(self) -> bool:
        return self.flags[2]

    def __iter__(self) -> Iterator[bool]:
        return iter(self.flags)

    def all_in_contact(self) -> bool:
        return all(self.flags)

    @staticmethod
    def none() -> "ContactVector":
        return ContactVector((False, False, False))


def sensor_activation(value: float, threshold: float) -> int:
    """1 when the value reaches the threshold (boundary inclusive), else 0."""
    return 1 if value >= threshold else 0


def detect_contact(frame: NormalizedFrame, config: ContactConfig) -> bool:
    """True when at least ``min_active_count`` channels reach the threshold."""
    if frame.kind is not config.kind:
        raise ConfigurationError(f"frame kind {frame.kind} does not match config {config.kind}")
    active = int(np.count_nonzero(frame.values >= config.activation_threshold))
    return active >= config.min_active_count


def contact_vector(frames: Sequence[NormalizedFrame], config: ContactConfig) -> ContactVector:
    """Per-finger decisions for the (thumb, index, ring) frame triple."""
    if len(frames) != 3:
        raise ConfigurationError(f"need one frame per finger {FINGER_NAMES}, got {len(frames)}")
    return ContactVector(tuple(detect_contact(f, config) for f in frames))


@dataclass(frozen=True)
class ThresholdScore:
    """Criteria gathered for one candidate threshold by a calibration rig.

    Failed grasp attempts report worst-case deformation and slip so that
    degenerate thresholds (noise-triggered phantom contact, or thresholds
    too high to ever fire) cannot win on those criteria.
    """

    deformation_mm: float
    efficiency: float
    slip_mm: float


def calibrate_threshold(rig, candidates: Sequence[float]) -> float:
    """Pick the activation threshold that best trades the three criteria.

    For every candidate the rig runs a scripted grasp at its fixed
    tracking force and reports deformation (lower is better), grasp
    efficiency (higher is better) and slip distance under a standard
    pull (lower is better). Criteria are min-max normalised across the
    grid, combined with the weights above, and the best candidate wins;
    ties go to the larger threshold (less noise-triggered contact).

    ``rig`` must provide ``score_threshold(threshold) -> ThresholdScore``.
    """
    if len(candidates) == 0:
        raise ConfigurationError("candidate grid must not be empty")
    candidates = [float(c) for c in candidates]
    if sorted(candidates) != candidates:
        raise ConfigurationError("candidate grid must be sorted ascending")

    scores = [rig.score_threshold(c) for c in candidates]
    composites = composite_scores(scores)
    best = max(range(len(candidates)),
               key=lambda i: (composites[i], candidates[i]))
    return candidates[best]


def composite_scores(scores: Sequence[ThresholdScore]) -> list[float]:
    """Weighted composite of min-max normalised criteria, one per candidate."""

    def normalise(values):
        lo, hi = min(values), max(values)
        if hi == lo:
            return [0.0 for _ in values]
        return [(v - lo) / (hi - lo) for v in values]

    deform = normalise([s.deformation_mm for s in scores])
    slip = normalise([s.slip_mm for s in scores])
    return [
        DEFORMATION_WEIGHT * (1.0 - d) + EFFICIENCY_WEIGHT * s.efficiency + SLIP_WEIGHT * (1.0 - sl)
        for d, s, sl in zip(deform, scores, slip)
    ]
