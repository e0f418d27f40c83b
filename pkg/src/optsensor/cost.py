"""Sensor-placement cost and its approximate gradient.

    J(omega) = alpha * sum_i omega_i
             + sum_{k<K} sum_i (f_n(f_r(z_k, omega)) - z_{k+1})_i^2 h_i dt

The gradient keeps only the predictor's input Jacobian in the chain rule (the
reconstruction is flat in ``omega`` almost everywhere), giving

    g = alpha + 2 dt sum_k M_k^T (h * r_k),   M_k = d f_n / d x at f_r(z_k, omega).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pde import Trajectory
from .predictor import Model, stack_history
from .reconstruction import ReconstructionSpec, SensorWeights, reconstruct_many


@dataclass(frozen=True)
class CostParams:
    alpha: float
    dt: float
    quad: np.ndarray

    def __post_init__(self):
        quad = np.asarray(self.quad, dtype=float)
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if np.any(quad <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "quad", quad)

    @classmethod
    def for_trajectory(cls, traj: Trajectory, alpha: float) -> CostParams:
        return cls(alpha, traj.dt, traj.grid.quad_weights)


@dataclass(frozen=True)
class CostReport:
    total: float
    sensor_term: float
    error_term: float
    per_step_error: np.ndarray


def _check(traj: Trajectory, w: SensorWeights, model: Model, p: CostParams):
    c = traj.grid.c
    if w.grid != traj.grid:
        raise ValueError("sensor weights and trajectory live on different grids")
    if model.n_out != c or model.n_in != model.history * c:
        raise ValueError(f"model shape ({model.n_in} -> {model.n_out}) does not fit c={c}")
    if p.quad.shape != (c,):
        raise ValueError("quadrature weights do not match the grid")


def model_inputs(traj: Trajectory, w: SensorWeights, model: Model,
                 spec: ReconstructionSpec) -> np.ndarray:
    """Reconstructed predictor inputs for steps ``k = 0 .. K-1``."""
    Zr = reconstruct_many(traj.snapshots[:-1], w, spec)
    return stack_history(Zr, model.history)


def residuals(traj, w, model, spec) -> np.ndarray:
    """``r_k = f_n(f_r(z_k, omega)) - z_{k+1}``, shape ``(K, c)``."""
    X = model_inputs(traj, w, model, spec)
    return model.predict_many(X) - traj.snapshots[1:]


def evaluate_cost(traj: Trajectory, w: SensorWeights, model: Model, spec: ReconstructionSpec,
                  p: CostParams) -> CostReport:
    _check(traj, w, model, p)
    R = residuals(traj, w, model, spec)
    per_step = (R**2) @ p.quad * p.dt
    sensor = p.alpha * float(np.sum(w.omega))
    error = float(np.sum(per_step))
    return CostReport(sensor + error, sensor, error, per_step)


def _pullback(model: Model, V: np.ndarray) -> np.ndarray:
    """Sum of ``M_k^T v_k`` over steps, folded back onto the ``c`` state entries."""
    G = model.vjp(V).sum(axis=0)
    # history inputs are all reconstructions of the same sensor layout
    return G.reshape(model.history, -1).sum(axis=0)


def error_gradient(traj, w, model, spec, p: CostParams) -> np.ndarray:
    """The error-term part of the approximate gradient."""
    _check(traj, w, model, p)
    R = residuals(traj, w, model, spec)
    return 2.0 * p.dt * _pullback(model, R * p.quad)


def approximate_gradient(traj: Trajectory, w: SensorWeights, model: Model,
                         spec: ReconstructionSpec, p: CostParams) -> np.ndarray:
    return p.alpha + error_gradient(traj, w, model, spec, p)


def cost_and_gradient(traj, w, model, spec, p) -> tuple[CostReport, np.ndarray]:
    """Both at once, sharing one reconstruction pass."""
    _check(traj, w, model, p)
    R = residuals(traj, w, model, spec)
    per_step = (R**2) @ p.quad * p.dt
    sensor = p.alpha * float(np.sum(w.omega))
    error = float(np.sum(per_step))
    g = p.alpha + 2.0 * p.dt * _pullback(model, R * p.quad)
    return CostReport(sensor + error, sensor, error, per_step), g


def surrogate_fd_check(traj, w, model, spec, p: CostParams, step: float = 1e-5) -> float:
    """Max deviation between the error gradient and finite differences of a frozen surrogate.

    The surrogate freezes the reconstructions ``x_k`` and perturbs the predictor
    input directly, ``J~(v) = sum_k sum_i (f_n(x_k + v) - z_{k+1})_i^2 h_i dt``,
    so its exact gradient at ``v = 0`` is what :func:`error_gradient` returns.
    This checks the Jacobian plumbing, not the (a.e. zero) true derivative in omega.
    """
    if np.any(np.abs(w.omega - 0.5) < step):
        raise ValueError(f"some weights lie within {step} of the sensor threshold")
    X = model_inputs(traj, w, model, spec)
    target = traj.snapshots[1:]
    c = traj.grid.c

    def surrogate(v):
        R = model.predict_many(X + np.tile(v, model.history)) - target
        return float(np.sum((R**2) @ p.quad) * p.dt)

    fd = np.empty(c)
    e = np.zeros(c)
    for i in range(c):
        e[i] = step
        fd[i] = (surrogate(e) - surrogate(-e)) / (2.0 * step)
        e[i] = 0.0
    return float(np.max(np.abs(fd - error_gradient(traj, w, model, spec, p))))
