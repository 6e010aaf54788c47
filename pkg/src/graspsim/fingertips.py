"""Emulated tactile fingertip families.

Two commercially inspired device families are modelled:

* ``BIOTAC_SP``: a curved fingertip carrying 24 impedance electrodes
  concentrated in the central contact patch plus four auxiliary channels
  (AC/DC pressure, AC/DC temperature). Each channel is a 12-bit count.
  Raw electrode readings are noisy.
* ``WTS_FT``: a flat fingertip with a 4x8 matrix of force cells, also
  12-bit, noise free, linear in applied load, and blind on its edges.

This module owns channel layout and geometry, the per-device sampling
schedule, and the synthesis of raw frames from simulated indentation
fields. Everything here is a pure function of its inputs; identical
inputs (including the noise seed) produce bit-identical frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError

FULL_SCALE = 4095  # 12-bit channels

FINGER_NAMES = ("thumb", "index", "ring")


class FingertipKind(str, Enum):
    BIOTAC_SP = "biotac"
    WTS_FT = "wts"


class SurfaceShape(str, Enum):
    CURVED = "curved"
    FLAT = "flat"


ELECTRODE_COUNT = 24          # BIOTAC_SP positioned sensors
BIOTAC_SCALAR_CHANNELS = ("pac", "pdc", "tac", "tdc")
WTS_GRID_COLS = 4
WTS_GRID_ROWS = 8
WTS_CELL_COUNT = WTS_GRID_COLS * WTS_GRID_ROWS

# Synthetic default electrode map: three concentric rings centred on the
# patch, densest in the middle. Real electrode coordinates are not published
# numerically, so this documented table stands in and can be overridden via
# config. (radius, count, phase offset in degrees)
_ELECTRODE_RINGS = ((0.10, 4, 45.0), (0.22, 8, 22.5), (0.34, 12, 15.0))


def default_biotac_positions() -> tuple[tuple[float, float], ...]:
    """24 electrode coordinates on the normalised [0,1]^2 contact patch."""
    positions = []
    for radius, count, phase in _ELECTRODE_RINGS:
        for i in range(count):
            angle = math.radians(phase + 360.0 * i / count)
            positions.append((round(0.5 + radius * math.cos(angle), 6),
                              round(0.5 + radius * math.sin(angle), 6)))
    return tuple(positions)


def wts_grid_positions() -> tuple[tuple[float, float], ...]:
    """Cell centres of the 4x8 matrix, row-major (8 rows of 4 columns)."""
    return tuple(
        ((col + 0.5) / WTS_GRID_COLS, (row + 0.5) / WTS_GRID_ROWS)
        for row in range(WTS_GRID_ROWS)
        for col in range(WTS_GRID_COLS)
    )


@dataclass(frozen=True)
class SensorLayout:
    """Geometry and transfer parameters of one fingertip.

    ``delta_min_mm`` is the smallest indentation that produces a nonzero
    reading; ``gain_counts_per_mm`` converts indentation beyond that floor
    into raw counts (clamped to 12 bits).
    """

    kind: FingertipKind
    sensor_positions: tuple[tuple[float, float], ...]
    surface_shape: SurfaceShape
    delta_min_mm: float
    gain_counts_per_mm: float
    friction_mu: float
    edge_sensitive: bool
    noise_sigma: float = 0.0
    mass_g: float = 9.5
    drift_multiplier: float = 1.0
    pac_baseline: int = 2048
    tac_baseline: int = 2020
    tdc_baseline: int = 2230

    def __post_init__(self):
        expected = ELECTRODE_COUNT if self.kind is FingertipKind.BIOTAC_SP else WTS_CELL_COUNT
        if len(self.sensor_positions) != expected:
            raise ConfigurationError(
                f"{self.kind.value} layout needs {expected} positioned sensors, "
                f"got {len(self.sensor_positions)}")
        for x, y in self.sensor_positions:
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise ConfigurationError(f"sensor position ({x}, {y}) outside [0,1]^2")
        if self.kind is FingertipKind.WTS_FT:
            self._check_regular_grid()
        if self.delta_min_mm <= 0:
            raise ConfigurationError("delta_min_mm must be > 0")
        if self.gain_counts_per_mm <= 0:
            raise ConfigurationError("gain_counts_per_mm must be > 0")
        if not 0.0 < self.friction_mu <= 2.0:
            raise ConfigurationError("friction_mu must be in (0, 2]")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")
        for name in ("pac_baseline", "tac_baseline", "tdc_baseline"):
            value = getattr(self, name)
            if not 0 <= value <= FULL_SCALE:
                raise ConfigurationError(f"{name} outside 12-bit range")

    def _check_regular_grid(self):
        xs = sorted({x for x, _ in self.sensor_positions})
        ys = sorted({y for _, y in self.sensor_positions})
        if len(xs) != WTS_GRID_COLS or len(ys) != WTS_GRID_ROWS:
            raise ConfigurationError("WTS_FT positions must form a 4x8 grid")
        expected = {(x, y) for y in ys for x in xs}
        if set(self.sensor_positions) != expected:
            raise ConfigurationError("WTS_FT positions must form a regular grid")

    @property
    def positioned_count(self) -> int:
        return len(self.sensor_positions)

    @property
    def channel_count(self) -> int:
        """Total channels entering contact detection (z in the finger sum)."""
        if self.kind is FingertipKind.BIOTAC_SP:
            return ELECTRODE_COUNT + len(BIOTAC_SCALAR_CHANNELS)
        return WTS_CELL_COUNT


def biotac_layout(**overrides) -> SensorLayout:
    params = dict(
        kind=FingertipKind.BIOTAC_SP,
        sensor_positions=default_biotac_positions(),
        surface_shape=SurfaceShape.CURVED,
        delta_min_mm=5.0,
        gain_counts_per_mm=400.0,
        friction_mu=1.0,
        edge_sensitive=True,
        noise_sigma=8.0,
        mass_g=9.5,
        drift_multiplier=1.0,
    )
    params.update(overrides)
    return SensorLayout(**params)


def wts_layout(**overrides) -> SensorLayout:
    params = dict(
        kind=FingertipKind.WTS_FT,
        sensor_positions=wts_grid_positions(),
        surface_shape=SurfaceShape.FLAT,
        delta_min_mm=30.0,
        gain_counts_per_mm=400.0,
        friction_mu=0.6,
        edge_sensitive=False,
        noise_sigma=0.0,
        mass_g=25.8,
        drift_multiplier=3.7,
    )
    params.update(overrides)
    return SensorLayout(**params)


def layout_for(kind: FingertipKind | str, **overrides) -> SensorLayout:
    kind = FingertipKind(kind)
    if "sensor_positions" in overrides:   # config files carry nested lists
        overrides["sensor_positions"] = tuple(
            (float(x), float(y)) for x, y in overrides["sensor_positions"])
    if "surface_shape" in overrides:
        overrides["surface_shape"] = SurfaceShape(overrides["surface_shape"])
    if kind is FingertipKind.BIOTAC_SP:
        return biotac_layout(**overrides)
    return wts_layout(**overrides)


@dataclass(frozen=True)
class FingertipFrame:
    """One timestamped reading of every channel of one fingertip.

    ``values`` holds the positioned sensors (24 electrodes or 32 cells).
    The four auxiliary counts exist only for BIOTAC_SP frames.
    """

    kind: FingertipKind
    timestamp_us: int
    values: tuple[int, ...]
    pac: int | None = None
    pdc: int | None = None
    tac: int | None = None
    tdc: int | None = None

    def __post_init__(self):
        if self.kind is FingertipKind.BIOTAC_SP:
            if len(self.values) != ELECTRODE_COUNT:
                raise ConfigurationError("BIOTAC_SP frame needs 24 electrode values")
            scalars = (self.pac, self.pdc, self.tac, self.tdc)
            if any(s is None for s in scalars):
                raise ConfigurationError("BIOTAC_SP frame needs pac/pdc/tac/tdc")
        else:
            if len(self.values) != WTS_CELL_COUNT:
                raise ConfigurationError("WTS_FT frame needs exactly 32 values")
            if any(s is not None for s in (self.pac, self.pdc, self.tac, self.tdc)):
                raise ConfigurationError("WTS_FT frames carry no auxiliary scalars")
        counts = self.all_counts()
        if min(counts) < 0 or max(counts) > FULL_SCALE:
            raise ConfigurationError("channel value outside 12-bit range")

    def all_counts(self) -> tuple[int, ...]:
        if self.kind is FingertipKind.BIOTAC_SP:
            return self.values + (self.pac, self.pdc, self.tac, self.tdc)
        return self.values

    def channel_values(self) -> np.ndarray:
        """Full channel vector as float64 (28 for BIOTAC_SP, 32 for WTS_FT)."""
        return np.asarray(self.all_counts(), dtype=np.float64)


@dataclass(frozen=True)
class SampleSchedule:
    """Fixed per-channel sampling rates of one device family."""

    kind: FingertipKind
    rates_hz: dict[str, float]
    transducer_counts: dict[str, int]
    aggregate_hz: float

    def __post_init__(self):
        if any(r <= 0 for r in self.rates_hz.values()):
            raise ConfigurationError("sampling rates must be strictly positive")
        if self.aggregate_hz <= 0:
            raise ConfigurationError("aggregate rate must be strictly positive")

    @property
    def frame_period_us(self) -> int:
        return round(1e6 / self.aggregate_hz)


def sample_schedule(kind: FingertipKind | str) -> SampleSchedule:
    """Per-channel rates for the device family.

    BIOTAC_SP interleaves its channels on a 4.4 kHz sample clock: the AC
    pressure channel takes every other slot, the remaining slots cycle
    round-robin through the electrodes and the DC/temperature channels.
    WTS_FT delivers all 32 cells per frame at the frame rate.
    """
    kind = FingertipKind(kind)
    if kind is FingertipKind.BIOTAC_SP:
        return SampleSchedule(
            kind=kind,
            rates_hz={
                "electrode": 73.0,
                "pressure_ac": 2200.0,
                "pressure_dc": 73.0,
                "temperature_ac": 73.0,
                "temperature_dc": 73.0,
            },
            transducer_counts={
                "electrode": 24,
                "pressure_ac": 1,
                "pressure_dc": 1,
                "temperature_ac": 1,
                "temperature_dc": 1,
            },
            aggregate_hz=4400.0,
        )
    return SampleSchedule(
        kind=kind,
        rates_hz={"cell": 400.0},
        transducer_counts={"cell": WTS_CELL_COUNT},
        aggregate_hz=400.0,
    )


@dataclass(frozen=True)
class ContactField:
    """Per-sensor indentation depths (mm) driving one synthesized frame."""

    depths_mm: tuple[float, ...]
    edge_contact: bool = False

    def __post_init__(self):
        if not all(map(math.isfinite, self.depths_mm)) or min(self.depths_mm) < 0:
            raise ConfigurationError("indentation depths must be finite and >= 0")

    @staticmethod
    def uniform(depth_mm: float, count: int, edge_contact: bool = False) -> "ContactField":
        return ContactField(depths_mm=(float(depth_mm),) * count, edge_contact=edge_contact)


def indentation_to_reading(depth_mm: float, layout: SensorLayout) -> int:
    """Thresholded-linear transfer from indentation depth to a raw count.

    Zero at or below the sensitivity floor, then linear in the excess
    depth, saturating at full scale.
    """
    if depth_mm < 0:
        raise ValueError(f"indentation depth must be >= 0, got {depth_mm}")
    if depth_mm <= layout.delta_min_mm:
        return 0
    return min(FULL_SCALE, round(layout.gain_counts_per_mm * (depth_mm - layout.delta_min_mm)))


def _vector_transfer(depths: np.ndarray, layout: SensorLayout) -> np.ndarray:
    """Vectorized form of indentation_to_reading (element-wise identical)."""
    raw = np.rint(layout.gain_counts_per_mm * (depths - layout.delta_min_mm))
    raw[depths <= layout.delta_min_mm] = 0.0
    return np.clip(raw, 0, FULL_SCALE)


def synthesize_frame(
    layout: SensorLayout,
    contact_field: ContactField,
    timestamp_us: int,
    noise_seed=0,
    rng: np.random.Generator | None = None,
) -> FingertipFrame:
    """Render a raw frame from an indentation field.

    BIOTAC_SP electrodes (and the derived DC pressure channel) get seeded
    zero-mean Gaussian noise; WTS_FT values are noise free. An edge contact
    on an edge-blind fingertip reads all zeros regardless of depth.

    Noise draws come from ``rng`` when given (a stream owner advancing its
    own generator), otherwise from a generator seeded with ``noise_seed``.
    """
    if len(contact_field.depths_mm) != layout.positioned_count:
        raise ConfigurationError(
            f"contact field has {len(contact_field.depths_mm)} depths, "
            f"layout has {layout.positioned_count} sensors")

    if contact_field.edge_contact and not layout.edge_sensitive:
        values = (0,) * layout.positioned_count
        if layout.kind is FingertipKind.BIOTAC_SP:
            return FingertipFrame(layout.kind, timestamp_us, values, pac=0, pdc=0, tac=0, tdc=0)
        return FingertipFrame(layout.kind, timestamp_us, values)

    depths = np.asarray(contact_field.depths_mm, dtype=np.float64)
    clean = _vector_transfer(depths, layout)
    if layout.kind is FingertipKind.WTS_FT:
        return FingertipFrame(layout.kind, timestamp_us,
                              tuple(clean.astype(np.int64).tolist()))

    pdc_clean = indentation_to_reading(float(depths.mean()), layout)
    if layout.noise_sigma > 0.0:
        if rng is None:
            rng = np.random.default_rng(noise_seed)
        noise = rng.normal(0.0, layout.noise_sigma, size=clean.size + 1)
        clean = np.clip(np.rint(clean + noise[:-1]), 0, FULL_SCALE)
        pdc = int(min(FULL_SCALE, max(0, round(pdc_clean + noise[-1]))))
    else:
        pdc = pdc_clean
    return FingertipFrame(
        layout.kind, timestamp_us, tuple(clean.astype(np.int64).tolist()),
        pac=layout.pac_baseline, pdc=pdc, tac=layout.tac_baseline, tdc=layout.tdc_baseline)
