"""Explicit finite-difference schemes for the heat and wave models.

Every scheme is linear, so one time step is a sparse matrix applied to the
state. Heat steps are one-level (``z_{k+1} = A z_k``); the wave step is the
two-level leapfrog ``z_{k+1} = 2 z_k - z_{k-1} + r L z_k``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import Grid, InitialCondition, eval_initial_condition


class ModelKind(str, enum.Enum):
    HEAT1D = "heat1d"
    WAVE1D = "wave1d"
    HEAT2D = "heat2d"


@dataclass(frozen=True)
class PdeModel:
    """PDE kind plus its coefficient (diffusivity for heat, squared speed for wave)."""

    kind: ModelKind
    coefficient: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if not self.coefficient > 0:
            raise ValueError(f"coefficient must be positive, got {self.coefficient}")

    @property
    def dim(self) -> int:
        return 2 if self.kind is ModelKind.HEAT2D else 1

    @property
    def stability_bound(self) -> float:
        return 1.0 if self.kind is ModelKind.WAVE1D else 0.5


class StabilityError(ValueError):
    """The explicit scheme would be unstable for the requested step size."""


@dataclass(frozen=True)
class Trajectory:
    grid: Grid
    dt: float
    snapshots: np.ndarray  # shape (K + 1, c)

    def __post_init__(self):
        z = np.asarray(self.snapshots, dtype=float)
        if z.ndim != 2 or z.shape[1] != self.grid.c:
            raise ValueError(f"snapshots must have shape (K+1, {self.grid.c}), got {z.shape}")
        if z.shape[0] < 2:
            raise ValueError("a trajectory needs at least two snapshots")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        z.setflags(write=False)
        object.__setattr__(self, "snapshots", z)

    @property
    def K(self) -> int:
        return self.snapshots.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.K + 1)


def stability_margin(model: PdeModel, grid: Grid, dt: float) -> float:
    """CFL-type ratio of the explicit scheme (must stay below ``model.stability_bound``)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    a = model.coefficient
    if model.kind is ModelKind.HEAT1D:
        return a * dt / grid.h[0] ** 2
    if model.kind is ModelKind.HEAT2D:
        return a * dt * (1.0 / grid.h[0] ** 2 + 1.0 / grid.h[1] ** 2)
    return a * dt**2 / grid.h[0] ** 2


def check_stability(model: PdeModel, grid: Grid, dt: float) -> float:
    """Return the stability margin, or raise if the explicit scheme would blow up.

    Heat schemes need a margin strictly below 1/2, the leapfrog wave scheme at most 1.
    """
    margin = stability_margin(model, grid, dt)
    bound = model.stability_bound
    unstable = margin > bound if model.kind is ModelKind.WAVE1D else margin >= bound
    if unstable:
        raise StabilityError(
            f"{model.kind.value}: stability margin {margin:.4g} violates bound {bound}; "
            "reduce dt or coarsen the grid"
        )
    return margin


def _second_difference(n: int, h: float, left: str, right: str) -> sp.csr_matrix:
    """1D second-difference matrix. ``left``/``right`` are 'dirichlet' or 'neumann'.

    Dirichlet rows are zero (the boundary value is held fixed). Neumann rows use
    a mirrored ghost node, which doubles the inward coupling.
    """
    main = np.full(n, -2.0)
    lower = np.ones(n - 1)
    upper = np.ones(n - 1)
    if left == "dirichlet":
        main[0] = 0.0
        upper[0] = 0.0
    else:
        upper[0] = 2.0
    if right == "dirichlet":
        main[-1] = 0.0
        lower[-1] = 0.0
    else:
        lower[-1] = 2.0
    return sp.diags([lower, main, upper], [-1, 0, 1], format="csr") / h**2


def laplacian(model: PdeModel, grid: Grid) -> sp.csr_matrix:
    """Discrete Laplacian with the boundary treatment of each model."""
    if grid.dim != model.dim:
        raise ValueError(f"{model.kind.value} needs a {model.dim}D grid")
    if model.kind is ModelKind.HEAT1D:
        return _second_difference(grid.n_points[0], grid.h[0], "dirichlet", "neumann")
    if model.kind is ModelKind.WAVE1D:
        return _second_difference(grid.n_points[0], grid.h[0], "dirichlet", "dirichlet")

    nx, ny = grid.n_points
    Lx = _second_difference(nx, grid.h[0], "dirichlet", "neumann")
    Ly = _second_difference(ny, grid.h[1], "neumann", "neumann")
    L = sp.kron(sp.identity(ny), Lx) + sp.kron(Ly, sp.identity(nx))
    # the y-coupling must not leak into the Dirichlet column x = 0
    keep = np.ones(grid.c)
    keep[::nx] = 0.0
    return (sp.diags(keep) @ L).tocsr()


def dirichlet_mask(model: PdeModel, grid: Grid) -> np.ndarray:
    mask = np.zeros(grid.c, dtype=bool)
    if model.kind is ModelKind.HEAT2D:
        mask[:: grid.n_points[0]] = True
    else:
        mask[0] = True
        if model.kind is ModelKind.WAVE1D:
            mask[-1] = True
    return mask


def step_operator(model: PdeModel, grid: Grid, dt: float) -> sp.csr_matrix:
    """One-step matrix ``A`` of a heat scheme, with ``z_{k+1} = A @ z_k``."""
    if model.kind is ModelKind.WAVE1D:
        raise ValueError("the wave scheme is two-level and has no one-step matrix")
    A = sp.identity(grid.c, format="csr") + model.coefficient * dt * laplacian(model, grid)
    # Dirichlet rows map to zero
    A = sp.diags((~dirichlet_mask(model, grid)).astype(float)) @ A
    A = A.tocsr()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def simulate(model: PdeModel, ic: InitialCondition | np.ndarray, grid: Grid, dt: float,
             K: int) -> Trajectory:
    """Run the explicit scheme for ``K`` steps and return all ``K + 1`` snapshots.

    ``ic`` is either an :class:`InitialCondition` or an explicit state vector.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    check_stability(model, grid, dt)

    if isinstance(ic, InitialCondition):
        z0 = eval_initial_condition(ic, grid)
    else:
        z0 = np.array(ic, dtype=float).ravel()
        if z0.size != grid.c:
            raise ValueError(f"initial state has length {z0.size}, grid has {grid.c} points")
    fixed = dirichlet_mask(model, grid)
    z0 = z0.copy()
    z0[fixed] = 0.0

    Z = np.empty((K + 1, grid.c))
    Z[0] = z0
    if model.kind is ModelKind.WAVE1D:
        rL = (model.coefficient * dt**2) * laplacian(model, grid)
        # Taylor start consistent with u_t(x, 0) = 0
        Z[1] = Z[0] + 0.5 * (rL @ Z[0])
        for k in range(1, K):
            Z[k + 1] = 2.0 * Z[k] - Z[k - 1] + rL @ Z[k]
    else:
        A = step_operator(model, grid, dt)
        for k in range(K):
            Z[k + 1] = A @ Z[k]
    return Trajectory(grid, dt, Z)
