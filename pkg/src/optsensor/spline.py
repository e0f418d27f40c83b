"""Not-a-knot cubic spline interpolation with polynomial extrapolation.

Supports many right-hand sides at once: ``y`` may be ``(m,)`` or ``(m, n)``,
and all columns share the knot vector (and the factorization).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded


def _slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """First derivatives at the knots of the not-a-knot spline (``m >= 4``)."""
    m = x.size
    dx = np.diff(x)
    slope = np.diff(y, axis=0) / dx[:, None]

    # banded storage: ab[0] superdiagonal, ab[1] diagonal, ab[2] subdiagonal
    ab = np.zeros((3, m))
    b = np.empty((m, y.shape[1]))

    ab[1, 1:-1] = 2.0 * (dx[:-1] + dx[1:])
    ab[0, 2:] = dx[:-1]
    ab[2, :-2] = dx[1:]
    b[1:-1] = 3.0 * (dx[1:, None] * slope[:-1] + dx[:-1, None] * slope[1:])

    # third derivative continuous across the second knot
    d = x[2] - x[0]
    ab[1, 0] = dx[1]
    ab[0, 1] = d
    b[0] = ((dx[0] + 2.0 * d) * dx[1] * slope[0] + dx[0] ** 2 * slope[1]) / d

    # ... and across the second-to-last knot
    d = x[-1] - x[-3]
    ab[1, -1] = dx[-2]
    ab[2, -2] = d
    b[-1] = (dx[-1] ** 2 * slope[-2] + (2.0 * d + dx[-1]) * dx[-2] * slope[-1]) / d

    return solve_banded((1, 1), ab, b, overwrite_b=True, check_finite=False)


def _hermite_eval(x, y, s, xq):
    i = np.clip(np.searchsorted(x, xq, side="right") - 1, 0, x.size - 2)
    h = (x[i + 1] - x[i])[:, None]
    t = (xq - x[i])[:, None]
    slope = (y[i + 1] - y[i]) / h
    c2 = (3.0 * slope - 2.0 * s[i] - s[i + 1]) / h
    c3 = (s[i] + s[i + 1] - 2.0 * slope) / h**2
    return y[i] + t * (s[i] + t * (c2 + t * c3))


def interpolate(x, y, xq) -> np.ndarray:
    """Interpolate knots ``(x, y)`` at ``xq``.

    Four or more knots give the not-a-knot cubic spline; three give the
    interpolating parabola, two the line, one a constant, none zeros.
    Outside ``[x[0], x[-1]]`` the end pieces are extended.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xq = np.asarray(xq, dtype=float)
    vector = y.ndim == 1
    if vector:
        y = y[:, None]
    m = x.size
    if y.shape[0] != m:
        raise ValueError("x and y have different lengths")
    if m > 1 and np.any(np.diff(x) <= 0):
        raise ValueError("knots must be strictly increasing")

    if m == 0:
        out = np.zeros((xq.size, y.shape[1]))
    elif m == 1:
        out = np.repeat(y[:1], xq.size, axis=0)
    elif m == 2:
        slope = (y[1] - y[0]) / (x[1] - x[0])
        out = y[0] + (xq - x[0])[:, None] * slope
    elif m == 3:
        # Newton form of the parabola
        d1 = (y[1] - y[0]) / (x[1] - x[0])
        d2 = ((y[2] - y[1]) / (x[2] - x[1]) - d1) / (x[2] - x[0])
        t0 = (xq - x[0])[:, None]
        t1 = (xq - x[1])[:, None]
        out = y[0] + t0 * (d1 + t1 * d2)
    else:
        out = _hermite_eval(x, y, _slopes(x, y), xq)
    return out[:, 0] if vector else out
