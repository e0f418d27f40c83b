"""Uniform grids, trapezoidal quadrature weights and initial conditions."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product mesh on ``[0, L_1] x ... x [0, L_d]``.

    States living on the grid are flat vectors of length ``c``. In 2D the
    flattening is row-major over ``(ny, nx)``, i.e. ``x`` varies fastest.
    """

    dim: int
    extent: tuple[float, ...]
    n_points: tuple[int, ...]
    h: tuple[float, ...] = field(init=False)
    quad_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.extent) != self.dim or len(self.n_points) != self.dim:
            raise ValueError("extent and n_points need one entry per axis")
        if any(n < 2 for n in self.n_points):
            raise ValueError(f"need at least 2 points per axis, got {self.n_points}")
        if any(not L > 0 for L in self.extent):
            raise ValueError(f"extent must be positive, got {self.extent}")
        h = tuple(L / (n - 1) for L, n in zip(self.extent, self.n_points))
        object.__setattr__(self, "h", h)

        w = trapezoid_weights(self.n_points[0], h[0])
        if self.dim == 2:
            # axis 0 of the state array is y, axis 1 is x
            w = np.outer(trapezoid_weights(self.n_points[1], h[1]), w).ravel()
        w.setflags(write=False)
        object.__setattr__(self, "quad_weights", w)

    @property
    def c(self) -> int:
        return int(np.prod(self.n_points))

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape of a state: ``(n,)`` in 1D, ``(ny, nx)`` in 2D."""
        if self.dim == 1:
            return (self.n_points[0],)
        return (self.n_points[1], self.n_points[0])

    @property
    def measure(self) -> float:
        return float(np.prod(self.extent))

    def axis(self, i: int = 0) -> np.ndarray:
        return np.linspace(0.0, self.extent[i], self.n_points[i])

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Flat coordinate arrays, one per axis, each of length ``c``."""
        if self.dim == 1:
            return (self.axis(0),)
        X, Y = np.meshgrid(self.axis(0), self.axis(1))
        return X.ravel(), Y.ravel()

    def to_dict(self) -> dict:
        return {"dim": self.dim, "extent": list(self.extent), "n_points": list(self.n_points)}


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, float(h))
    w[0] = w[-1] = 0.5 * h
    return w


def build_grid(dim: int, extent, n_points) -> Grid:
    """Build a uniform grid. Scalars for ``extent``/``n_points`` are broadcast."""
    extent = tuple(float(e) for e in np.broadcast_to(np.asarray(extent, dtype=float), (dim,)))
    n_points = tuple(int(n) for n in np.broadcast_to(np.asarray(n_points), (dim,)))
    return Grid(dim, extent, n_points)


class ICKind(str, enum.Enum):
    POLY1D_HALF = "poly1d_half"
    POLY1D_QUARTER = "poly1d_quarter"
    POLY1D_NEG_HALF = "poly1d_neg_half"
    HEAVISIDE_HALF = "heaviside_half"
    POLY2D = "poly2d"


def _bump(x):
    return x**2 * (x - 1) ** 2


_RAW_1D = {
    ICKind.POLY1D_HALF: lambda x: _bump(x) * (x - 0.5) ** 2,
    ICKind.POLY1D_QUARTER: lambda x: _bump(x) * (x - 0.25) ** 2,
    ICKind.POLY1D_NEG_HALF: lambda x: _bump(x) * (x + 0.5) ** 2,
    # tie at x = 1/2 goes to 1
    ICKind.HEAVISIDE_HALF: lambda x: np.where(x >= 0.5, 1.0, 0.0),
}


@dataclass(frozen=True)
class InitialCondition:
    kind: ICKind
    normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", ICKind(self.kind))

    @property
    def dim(self) -> int:
        return 2 if self.kind is ICKind.POLY2D else 1

    def raw(self, *coords: np.ndarray) -> np.ndarray:
        """Un-normalized closed form evaluated at the given coordinates."""
        if self.kind is ICKind.POLY2D:
            x, y = coords
            return _bump(x) * _bump(y)
        return np.asarray(_RAW_1D[self.kind](coords[0]), dtype=float)

    def __call__(self, *coords: np.ndarray) -> np.ndarray:
        u = self.raw(*coords)
        if self.normalize:
            peak = raw_maximum(self.kind)
            if peak > 0:
                u = u / peak
        return u


@lru_cache(maxsize=None)
def _max_on_unit_interval(f) -> float:
    # coarse scan brackets the global maximum, then a bounded 1D refine
    xs = np.linspace(0.0, 1.0, 10_001)
    vals = f(xs)
    i = int(np.argmax(vals))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    res = minimize_scalar(lambda t: -float(f(t)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return max(float(vals[i]), -float(res.fun))


def raw_maximum(kind: ICKind) -> float:
    """Maximum of the closed-form initial condition over the unit domain."""
    kind = ICKind(kind)
    if kind is ICKind.HEAVISIDE_HALF:
        return 1.0
    if kind is ICKind.POLY2D:
        # separable and nonnegative, so the peak is the square of the 1D peak
        return _max_on_unit_interval(_bump) ** 2
    return _max_on_unit_interval(_RAW_1D[kind])


def eval_initial_condition(ic: InitialCondition, grid: Grid) -> np.ndarray:
    if ic.dim != grid.dim:
        raise ValueError(f"initial condition {ic.kind.value} is {ic.dim}D, grid is {grid.dim}D")
    return np.ascontiguousarray(ic(*grid.coordinates()), dtype=float)
