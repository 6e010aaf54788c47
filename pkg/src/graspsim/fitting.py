"""Second-degree least-squares fitting for slip curves."""

from __future__ import annotations

import numpy as np

from .errors import FitError


def polyfit2(points) -> tuple[float, float, float]:
    """Least-squares quadratic through (x, y) points.

    Returns (a, b, c) minimising sum(y - (a*x^2 + b*x + c))^2. Solved via
    an SVD least-squares on the Vandermonde matrix; the test suite checks
    it against an independent normal-equations solve.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise FitError("points must be an (n, 2) array of (x, y) pairs")
    if pts.shape[0] < 3:
        raise FitError(f"need at least 3 points, got {pts.shape[0]}")
    x, y = pts[:, 0], pts[:, 1]
    if np.unique(x).size < 3:
        raise FitError("need at least 3 distinct x values for a quadratic fit")
    vander = np.column_stack([x ** 2, x, np.ones_like(x)])
    coeffs, _, rank, _ = np.linalg.lstsq(vander, y, rcond=None)
    if rank < 3:
        raise FitError("rank-deficient quadratic fit")
    return tuple(float(c) for c in coeffs)


def quadratic(coeffs, x):
    a, b, c = coeffs
    return a * np.asarray(x, dtype=np.float64) ** 2 + b * np.asarray(x, dtype=np.float64) + c
