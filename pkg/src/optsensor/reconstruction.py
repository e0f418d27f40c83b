"""Sensor weight vectors and full-state reconstruction from sensor readings.

A weight ``omega_i >= 0.5`` means a sensor sits at grid vertex ``i``. The
reconstruction depends on ``omega`` only through that active set, so it is
piecewise constant in ``omega``; its derivative is zero except on the
threshold surfaces and is never evaluated by the optimizer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import spline
from .grid import Grid

THRESHOLD = 0.5


class SensorWeights:
    """Weights ``omega`` in ``[0, 1]^c`` over the vertices of ``grid``."""

    def __init__(self, omega, grid: Grid):
        omega = np.array(omega, dtype=float).ravel()
        if omega.size != grid.c:
            raise ValueError(f"omega has length {omega.size}, grid has {grid.c} points")
        if np.any(~np.isfinite(omega)) or omega.min() < 0.0 or omega.max() > 1.0:
            raise ValueError("sensor weights must lie in [0, 1]")
        omega.setflags(write=False)
        self.omega = omega
        self.grid = grid

    @classmethod
    def full(cls, grid: Grid, value: float = 1.0) -> SensorWeights:
        return cls(np.full(grid.c, value), grid)

    @property
    def mask(self) -> np.ndarray:
        return self.omega >= THRESHOLD

    @property
    def active(self) -> np.ndarray:
        return active_set(self)

    @property
    def coverage(self) -> float:
        return float(np.count_nonzero(self.mask)) / self.grid.c

    def __repr__(self):
        return f"SensorWeights(c={self.grid.c}, coverage={self.coverage:.3f})"


def active_set(w: SensorWeights) -> np.ndarray:
    """Sorted indices of vertices carrying a sensor."""
    return np.flatnonzero(w.omega >= THRESHOLD)


class Method(str, enum.Enum):
    CUBIC_SPLINE_1D = "cubic_spline_1d"
    BILINEAR_GRID_2D = "bilinear_grid_2d"


@dataclass(frozen=True)
class ReconstructionSpec:
    method: Method = Method.CUBIC_SPLINE_1D
    # treat the domain corners as sensors regardless of omega
    boundary_anchor: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))

    @classmethod
    def for_grid(cls, grid: Grid, boundary_anchor: bool = False) -> ReconstructionSpec:
        method = Method.CUBIC_SPLINE_1D if grid.dim == 1 else Method.BILINEAR_GRID_2D
        return cls(method, boundary_anchor)

    def to_dict(self) -> dict:
        return {"method": self.method.value, "boundary_anchor": self.boundary_anchor}


def _support_mask(w: SensorWeights, spec: ReconstructionSpec) -> np.ndarray:
    mask = w.mask.copy()
    if spec.boundary_anchor:
        if w.grid.dim == 1:
            mask[[0, -1]] = True
        else:
            ny, nx = w.grid.shape
            m2 = mask.reshape(ny, nx)
            m2[[0, 0, -1, -1], [0, -1, 0, -1]] = True
    return mask


def _reconstruct_1d(Z: np.ndarray, mask: np.ndarray, grid: Grid) -> np.ndarray:
    x = grid.axis(0)
    idx = np.flatnonzero(mask)
    return spline.interpolate(x[idx], Z[:, idx].T, x).T


def _reconstruct_2d(Z: np.ndarray, mask: np.ndarray, grid: Grid) -> np.ndarray:
    """Separable linear passes: along x within each sensor-bearing row, then along y.

    On a tensor-product sensor layout this is exactly bilinear interpolation;
    beyond the outermost sensor line values are held constant.
    """
    ny, nx = grid.shape
    x, y = grid.axis(0), grid.axis(1)
    m2 = mask.reshape(ny, nx)
    F = Z.reshape(-1, ny, nx)
    rows = np.flatnonzero(m2.any(axis=1))
    out = np.zeros_like(F)
    if rows.size == 0:
        return out.reshape(Z.shape)

    filled = np.empty((F.shape[0], rows.size, nx))
    for j, r in enumerate(rows):
        cols = np.flatnonzero(m2[r])
        for n in range(F.shape[0]):
            filled[n, j] = np.interp(x, x[cols], F[n, r, cols])
    for n in range(F.shape[0]):
        for col in range(nx):
            out[n, :, col] = np.interp(y, y[rows], filled[n, :, col])
    return out.reshape(Z.shape)


def reconstruct_many(Z: np.ndarray, w: SensorWeights, spec: ReconstructionSpec) -> np.ndarray:
    """Reconstruct every row of ``Z`` (shape ``(n, c)``) from the same sensor set."""
    Z = np.asarray(Z, dtype=float)
    grid = w.grid
    if Z.ndim != 2 or Z.shape[1] != grid.c:
        raise ValueError(f"expected states of length {grid.c}, got shape {Z.shape}")
    expected = Method.CUBIC_SPLINE_1D if grid.dim == 1 else Method.BILINEAR_GRID_2D
    if spec.method is not expected:
        raise ValueError(f"{spec.method.value} does not apply to a {grid.dim}D grid")

    mask = _support_mask(w, spec)
    if mask.all():
        return Z.copy()
    if grid.dim == 1:
        out = _reconstruct_1d(Z, mask, grid)
    else:
        out = _reconstruct_2d(Z, mask, grid)
    # sensor readings pass through untouched
    out[:, mask] = Z[:, mask]
    return out


def reconstruct(z: np.ndarray, w: SensorWeights, spec: ReconstructionSpec) -> np.ndarray:
    """Fill the non-sensor entries of ``z`` by interpolating the sensor readings."""
    z = np.asarray(z, dtype=float).ravel()
    return reconstruct_many(z[None, :], w, spec)[0]
