"""Per-sensor signal conditioning between raw frames and contact detection.

BIOTAC_SP streams are noisy, so each channel runs through a first-order
low-pass (an exponential moving average with retention ``P``):

    filtered <- P * filtered_prev + (1 - P) * raw

followed by a normalised delta, the absolute difference between the
filtered and raw channel vectors clamped to ``delta_cap`` (default 200).
Quiet channels tend to 0, active channels spike toward the cap.

WTS_FT cells are linear in the applied load and need no conditioning;
their pipeline is a pass-through that forwards raw counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, StateError
from .fingertips import FingertipFrame, FingertipKind

DEFAULT_RETENTION = 0.8
DEFAULT_DELTA_CAP = 200.0


@dataclass
class FilterState:
    """Low-pass state for one fingertip stream. Single writer."""

    retention: float
    values: np.ndarray | None = None
    initialized: bool = False

    def __post_init__(self):
        if not 0.0 <= self.retention <= 1.0:
            raise ConfigurationError(f"retention must be within [0,1], got {self.retention}")


@dataclass(frozen=True)
class NormalizedFrame:
    """Channel vector after conditioning, ready for contact detection."""

    kind: FingertipKind
    timestamp_us: int
    values: np.ndarray

    def __post_init__(self):
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ConfigurationError("normalized values must be finite and >= 0")


def lowpass_step(state: FilterState, frame: FingertipFrame,
                 raw: np.ndarray | None = None) -> FilterState:
    """Advance the filter by one frame, seeding from the first frame seen.

    The multiply form ``P*prev + (1-P)*raw`` is kept verbatim so the
    P=0 (pure pass) and P=1 (hold) cases are bit-exact.
    """
    if raw is None:
        raw = frame.channel_values()
    if not state.initialized:
        state.values = raw.copy()
        state.initialized = True
        return state
    if state.values.shape != raw.shape:
        raise ConfigurationError(
            f"frame has {raw.shape[0]} channels, filter state has {state.values.shape[0]}")
    state.values = state.retention * state.values + (1.0 - state.retention) * raw
    return state


def normalize_delta(
    state: FilterState,
    frame: FingertipFrame,
    delta_cap: float = DEFAULT_DELTA_CAP,
    raw: np.ndarray | None = None,
) -> NormalizedFrame:
    """Clamped absolute difference between the filtered and raw vectors."""
    if not state.initialized:
        raise StateError("filter state not initialized; feed a frame through lowpass_step first")
    if raw is None:
        raw = frame.channel_values()
    if state.values.shape != raw.shape:
        raise ConfigurationError("frame/channel shape mismatch")
    delta = np.minimum(delta_cap, np.abs(state.values - raw))
    return NormalizedFrame(kind=frame.kind, timestamp_us=frame.timestamp_us, values=delta)


@dataclass
class Pipeline:
    """Processing chain for one fingertip stream.

    ``stages`` names the chain: ("lowpass", "normalize") for conditioned
    streams, ("identity",) for the pass-through.
    """

    kind: FingertipKind
    stages: tuple[str, ...]
    delta_cap: float = DEFAULT_DELTA_CAP
    state: FilterState = field(default=None)

    def process(self, frame: FingertipFrame) -> NormalizedFrame:
        if frame.kind is not self.kind:
            raise ConfigurationError(f"frame kind {frame.kind} does not match pipeline {self.kind}")
        raw = frame.channel_values()
        if self.stages == ("identity",):
            return NormalizedFrame(kind=frame.kind, timestamp_us=frame.timestamp_us, values=raw)
        lowpass_step(self.state, frame, raw=raw)
        return normalize_delta(self.state, frame, self.delta_cap, raw=raw)


def pipeline_for(
    kind: FingertipKind | str,
    retention: float = DEFAULT_RETENTION,
    delta_cap: float = DEFAULT_DELTA_CAP,
    mode: str | None = None,
) -> Pipeline:
    """Build the processing chain for a device family.

    BIOTAC_SP defaults to the filtered chain, WTS_FT to the pass-through.
    ``mode`` ("filtered" or "passthrough") overrides the default, which
    lets the contact stage consume raw values where configured.
    """
    kind = FingertipKind(kind)
    if mode is None:
        mode = "filtered" if kind is FingertipKind.BIOTAC_SP else "passthrough"
    if mode == "passthrough":
        return Pipeline(kind=kind, stages=("identity",))
    if mode == "filtered":
        return Pipeline(kind=kind, stages=("lowpass", "normalize"),
                        delta_cap=delta_cap, state=FilterState(retention=retention))
    raise ConfigurationError(f"unknown pipeline mode {mode!r}")
