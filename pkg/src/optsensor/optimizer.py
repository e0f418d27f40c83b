"""Box-constrained descent on sensor weights using the approximate gradient.

Two methods are available, both driven only by ``J`` and its approximate
gradient ``g``:

* projected gradient with Armijo backtracking along the projection arc;
* a trust-region method taking the Cauchy point of the linear model
  ``J + g.d`` over the box intersected with the ball of radius ``Delta``.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .cost import CostParams, CostReport, cost_and_gradient, evaluate_cost
from .pde import Trajectory
from .predictor import Model
from .reconstruction import THRESHOLD, ReconstructionSpec, SensorWeights

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("iter", "J", "sensor_term", "error_term", "pg_norm", "coverage", "step",
                 "accepted")


class Method(str, enum.Enum):
    PROJECTED_GRADIENT = "projected_gradient"
    TRUST_REGION_CAUCHY = "trust_region_cauchy"


@dataclass(frozen=True)
class OptimizerConfig:
    method: Method = Method.PROJECTED_GRADIENT
    max_outer_iters: int = 100
    initial_step: float = 0.1
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 30
    initial_trust_radius: float = 1.0
    eta_accept: float = 1e-4
    eta_expand: float = 0.75
    eta_shrink: float = 0.25
    expand_factor: float = 2.0
    shrink_factor: float = 0.25
    rng_seed: int = 0
    pg_tol: float = 1e-8
    rel_tol: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        positive = ("initial_step", "armijo_c1", "backtrack", "initial_trust_radius",
                    "expand_factor", "shrink_factor")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (0 < self.backtrack < 1 and 0 < self.shrink_factor < 1 < self.expand_factor):
            raise ValueError("backtrack and shrink_factor must lie in (0, 1), expand_factor > 1")


@dataclass
class TraceRecord:
    iter: int
    J: float
    sensor_term: float
    error_term: float
    pg_norm: float
    coverage: float
    step: float
    accepted: bool

    def row(self) -> list[str]:
        return [str(self.iter), repr(self.J), repr(self.sensor_term), repr(self.error_term),
                repr(self.pg_norm), repr(self.coverage), repr(self.step),
                "1" if self.accepted else "0"]


@dataclass
class OptimizationTrace:
    """One record per evaluated proposal, plus the start point as ``iter == 0``.

    ``pg_norm`` is the projected-gradient norm at the iterate the proposal was
    made from; ``step`` is the accepted Armijo step length or the trust radius.
    """

    records: list[TraceRecord] = field(default_factory=list)
    iterates: list[np.ndarray] = field(default_factory=list)  # accepted omegas, in order
    status: str = "running"

    def accepted_J(self) -> np.ndarray:
        return np.array([r.J for r in self.records if r.accepted])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in self.records:
            writer.writerow(r.row())
        return buf.getvalue()


class OptimizationError(RuntimeError):
    def __init__(self, message, trace: OptimizationTrace):
        super().__init__(message)
        self.trace = trace


def project_box(v, grid=None):
    """Clamp to ``[0, 1]`` componentwise; wraps in :class:`SensorWeights` if a grid is given."""
    out = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
    return SensorWeights(out, grid) if grid is not None else out


def projected_gradient_norm(omega: np.ndarray, g: np.ndarray) -> float:
    return float(np.linalg.norm(project_box(omega - g) - omega))


@dataclass(frozen=True)
class CoverageReport:
    coverage: float
    n_active: int
    runs: list[tuple[int, int]]  # 1D: maximal contiguous active runs as (start, length)


def coverage_report(w: SensorWeights) -> CoverageReport:
    mask = w.omega >= THRESHOLD
    runs = []
    if w.grid.dim == 1:
        padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
        edges = np.flatnonzero(np.diff(padded))
        runs = [(int(s), int(e - s)) for s, e in zip(edges[::2], edges[1::2])]
    return CoverageReport(float(mask.sum()) / mask.size, int(mask.sum()), runs)


def _cauchy_step(omega, g, radius):
    """Minimizer of ``g.d`` over the projected-gradient arc, cut at ``|d| <= radius``."""
    def d_of(tau):
        return project_box(omega - tau * g) - omega

    gnorm = np.linalg.norm(g)
    if gnorm == 0:
        return np.zeros_like(omega)
    hi = radius / gnorm
    # the arc bends at the box faces, so |d(tau)| <= tau |g|; grow tau until it hits the ball
    while np.linalg.norm(d_of(hi)) < radius:
        d_hi = d_of(hi)
        if np.array_equal(d_hi, d_of(2 * hi)):
            return d_hi
        hi *= 2
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if np.linalg.norm(d_of(mid)) <= radius:
            lo = mid
        else:
            hi = mid
    return d_of(lo)


def optimize(traj: Trajectory, model: Model, spec: ReconstructionSpec, p: CostParams,
             cfg: OptimizerConfig = OptimizerConfig(), omega0=None):
    """Search ``[0, 1]^c`` for low-cost sensor weights.

    Starts from ``omega0`` or, by default, from a seeded uniform draw. Returns
    ``(best_weights, trace)``; the best-seen accepted iterate is returned rather
    than the last one.
    """
    grid = traj.grid
    if omega0 is None:
        omega0 = np.random.default_rng(cfg.rng_seed).uniform(0.0, 1.0, grid.c)
    omega = project_box(omega0)
    trace = OptimizationTrace()

    def evaluate(om) -> tuple[CostReport, np.ndarray]:
        rep, g = cost_and_gradient(traj, SensorWeights(om, grid), model, spec, p)
        if not (np.isfinite(rep.total) and np.all(np.isfinite(g))):
            trace.status = "nonfinite"
            raise OptimizationError("cost or gradient is not finite", trace)
        return rep, g

    def cost(om) -> CostReport:
        rep = evaluate_cost(traj, SensorWeights(om, grid), model, spec, p)
        if not np.isfinite(rep.total):
            trace.status = "nonfinite"
            raise OptimizationError("cost is not finite", trace)
        return rep

    def coverage(om):
        return float(np.count_nonzero(om >= THRESHOLD)) / om.size

    rep, g = evaluate(omega)
    pg = projected_gradient_norm(omega, g)
    trace.records.append(TraceRecord(0, rep.total, rep.sensor_term, rep.error_term, pg,
                                     coverage(omega), 0.0, True))
    trace.iterates.append(omega.copy())
    best_J, best = rep.total, omega.copy()
    radius = cfg.initial_trust_radius
    max_radius = np.sqrt(grid.c)

    for j in range(1, cfg.max_outer_iters + 1):
        if pg <= cfg.pg_tol:
            trace.status = "stationary"
            break

        if cfg.method is Method.PROJECTED_GRADIENT:
            t = cfg.initial_step
            for _ in range(cfg.max_backtracks + 1):
                trial = project_box(omega - t * g)
                d = trial - omega
                trial_rep = cost(trial)
                if trial_rep.total <= rep.total + cfg.armijo_c1 * float(g @ d):
                    accepted = True
                    break
                t *= cfg.backtrack
            else:
                accepted = False
            step = t
        else:
            d = _cauchy_step(omega, g, radius)
            trial = omega + d
            trial = project_box(trial)
            trial_rep = cost(trial)
            predicted = -float(g @ d)
            actual = rep.total - trial_rep.total
            rho = actual / predicted if predicted > 0 else -np.inf
            accepted = rho > cfg.eta_accept
            step = radius
            dnorm = np.linalg.norm(d)
            if rho < cfg.eta_shrink:
                radius = cfg.shrink_factor * dnorm if dnorm > 0 else cfg.shrink_factor * radius
            elif rho > cfg.eta_expand and dnorm >= 0.99 * radius:
                radius = min(cfg.expand_factor * radius, max_radius)

        trace.records.append(TraceRecord(j, trial_rep.total, trial_rep.sensor_term,
                                         trial_rep.error_term, pg, coverage(trial), step,
                                         accepted))
        if not accepted:
            if cfg.method is Method.PROJECTED_GRADIENT:
                trace.status = "line_search_failed"
                log.info("Armijo backtracking failed at iteration %d", j)
                break
            if radius < 1e-12:
                trace.status = "radius_collapsed"
                break
            continue

        previous = rep.total
        omega = trial
        rep, g = evaluate(omega)
        pg = projected_gradient_norm(omega, g)
        trace.iterates.append(omega.copy())
        if rep.total < best_J:
            best_J, best = rep.total, omega.copy()
        log.debug("iter %d: J=%.6g coverage=%.3f", j, rep.total, coverage(omega))
        if previous - rep.total <= cfg.rel_tol * max(abs(previous), 1.0):
            trace.status = "stalled"
            break
    else:
        trace.status = "max_iters"
    return SensorWeights(best, grid), trace
