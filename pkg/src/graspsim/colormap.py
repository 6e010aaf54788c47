"""Spatial activation maps rendered as 6-level intensity grids.

Each sensor value maps to one of six bins by equal division of the
working full scale, ordered black (no contact), brown, red, orange,
yellow, white (maximum contact). WTS_FT frames render on their native
8x4 cell grid; the curved electrode layout rasterizes onto a
configurable grid by nearest cell, keeping the hottest sensor per cell.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .fingertips import FULL_SCALE, FingertipKind, SensorLayout, WTS_GRID_COLS, WTS_GRID_ROWS
from .filtering import DEFAULT_DELTA_CAP, NormalizedFrame

BIN_COUNT = 6
BIN_NAMES = ("black", "brown", "red", "orange", "yellow", "white")


def full_scale_for(kind: FingertipKind, delta_cap: float = DEFAULT_DELTA_CAP) -> float:
    """Working full scale of conditioned values per family."""
    return delta_cap if kind is FingertipKind.BIOTAC_SP else float(FULL_SCALE)


def intensity_bin(value: float, full_scale: float) -> int:
    if value < 0:
        raise ConfigurationError("intensity values must be >= 0")
    return min(BIN_COUNT - 1, int(value * BIN_COUNT / full_scale))


def render_spatial_map(frame: NormalizedFrame, layout: SensorLayout, *,
                       grid_shape: tuple[int, int] | None = None,
                       full_scale: float | None = None) -> np.ndarray:
    """Bin a frame's positioned sensors into a (rows, cols) intensity grid."""
    if layout.kind is not frame.kind:
        raise ConfigurationError("frame and layout families differ")
    if full_scale is None:
        full_scale = full_scale_for(frame.kind)
    values = np.asarray(frame.values[:layout.positioned_count], dtype=np.float64)
    bins = np.minimum(BIN_COUNT - 1,
                      (values * BIN_COUNT / full_scale).astype(np.int64))

    if layout.kind is FingertipKind.WTS_FT:
        return bins.reshape(WTS_GRID_ROWS, WTS_GRID_COLS)

    rows, cols = grid_shape if grid_shape is not None else (6, 6)
    grid = np.zeros((rows, cols), dtype=np.int64)
    for (x, y), value in zip(layout.sensor_positions, bins):
        r = min(rows - 1, int(y * rows))
        c = min(cols - 1, int(x * cols))
        grid[r, c] = max(grid[r, c], value)
    return grid


def map_to_text(grid: np.ndarray) -> str:
    """Plain-text matrix of bin indices, one grid row per line."""
    return "\n".join(" ".join(str(int(v)) for v in row) for row in grid) + "\n"
