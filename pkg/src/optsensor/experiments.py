"""Declarative experiment configs, the end-to-end pipeline, and CSV export."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .cost import CostParams, CostReport, evaluate_cost
from .grid import Grid, InitialCondition, build_grid
from .optimizer import (OptimizationError, OptimizationTrace, OptimizerConfig, coverage_report,
                        optimize)
from .pde import PdeModel, Trajectory, check_stability, simulate
from .predictor import (Conv1, Dense2, Model, TrainingConfig, make_dataset, save_model,
                        stack_history, train)
from .reconstruction import ReconstructionSpec, SensorWeights, reconstruct_many

log = logging.getLogger(__name__)

BUILTIN_NAMES = ("heat1d-ic1", "heat1d-ic2", "heat1d-ic3", "heat1d-step",
                 "wave1d-ic1", "wave1d-ic2", "wave1d-ic3", "heat2d")
HEAT2D_SWEEP_ALPHAS = (1.0, 10.0, 50.0)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: PdeModel
    n_points: tuple[int, ...]
    extent: tuple[float, ...]
    dt: float
    K: int
    initial_condition: InitialCondition
    alpha: float
    training: TrainingConfig = TrainingConfig()
    reconstruction: ReconstructionSpec = ReconstructionSpec()
    optimizer: OptimizerConfig = OptimizerConfig()
    history: int = 1
    rng_seed: int = 0
    snapshot_steps: tuple[int, ...] | None = None  # None: 0, K/4, K/2, 3K/4, K
    output_dir: str | None = None

    def __post_init__(self):
        if self.model.dim != self.initial_condition.dim or len(self.n_points) != self.model.dim:
            raise ValueError("model, grid and initial condition dimensions disagree")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.history < 1 or (self.history > 1 and self.model.dim == 2):
            raise ValueError("history inputs are only available for 1D dense predictors")

    @property
    def grid(self) -> Grid:
        return build_grid(self.model.dim, self.extent, self.n_points)

    @property
    def steps_to_dump(self) -> tuple[int, ...]:
        if self.snapshot_steps is not None:
            return tuple(sorted(set(self.snapshot_steps)))
        return tuple(sorted({0, self.K // 4, self.K // 2, 3 * self.K // 4, self.K}))

    def with_seed(self, seed: int) -> ExperimentConfig:
        return replace(self, rng_seed=seed, training=replace(self.training, rng_seed=seed),
                       optimizer=replace(self.optimizer, rng_seed=seed))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "model": {"kind": self.model.kind.value, "coefficient": self.model.coefficient},
            "grid": {"extent": list(self.extent), "n_points": list(self.n_points)},
            "dt": self.dt,
            "K": self.K,
            "initial_condition": {"kind": self.initial_condition.kind.value,
                                  "normalize": self.initial_condition.normalize},
            "alpha": self.alpha,
            "training": dataclasses.asdict(self.training),
            "reconstruction": self.reconstruction.to_dict(),
            "optimizer": {**dataclasses.asdict(self.optimizer),
                          "method": self.optimizer.method.value},
            "history": self.history,
            "rng_seed": self.rng_seed,
            "snapshot_steps": None if self.snapshot_steps is None else list(self.snapshot_steps),
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        steps = d.get("snapshot_steps")
        return cls(
            name=d["name"],
            model=PdeModel(d["model"]["kind"], float(d["model"]["coefficient"])),
            n_points=tuple(int(n) for n in d["grid"]["n_points"]),
            extent=tuple(float(e) for e in d["grid"]["extent"]),
            dt=float(d["dt"]),
            K=int(d["K"]),
            initial_condition=InitialCondition(**d["initial_condition"]),
            alpha=float(d["alpha"]),
            training=TrainingConfig(**d.get("training", {})),
            reconstruction=ReconstructionSpec(**d.get("reconstruction", {})),
            optimizer=OptimizerConfig(**d.get("optimizer", {})),
            history=int(d.get("history", 1)),
            rng_seed=int(d.get("rng_seed", 0)),
            snapshot_steps=None if steps is None else tuple(int(s) for s in steps),
            output_dir=d.get("output_dir"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def hash(self) -> str:
        """Content hash of everything that affects results (``output_dir`` excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def save_config(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(cfg.to_json())
    return path


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


def builtin_experiment(name: str) -> ExperimentConfig:
    """Configs of the builtin heat and wave experiments."""
    ic_1d = {"ic1": "poly1d_half", "ic2": "poly1d_quarter", "ic3": "poly1d_neg_half",
             "step": "heaviside_half"}
    # the wave figures list their polynomial initial conditions in a different order
    ic_wave = {"ic1": "poly1d_half", "ic2": "poly1d_neg_half", "ic3": "poly1d_quarter"}
    family, _, variant = name.partition("-")
    if name not in BUILTIN_NAMES:
        raise KeyError(f"unknown experiment {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    if family == "heat1d":
        return ExperimentConfig(name, PdeModel("heat1d", 1e-4), (101,), (1.0,), 0.1, 100,
                                InitialCondition(ic_1d[variant]), alpha=5.0)
    if family == "wave1d":
        return ExperimentConfig(name, PdeModel("wave1d", 3e-3), (101,), (1.0,), 0.1, 100,
                                InitialCondition(ic_wave[variant]), alpha=2.0)
    # 34 points on [0, 1] gives h = 1/33, the closest uniform mesh to 3e-2
    return ExperimentConfig(name, PdeModel("heat2d", 1e-4), (34, 34), (1.0, 1.0), 0.1, 100,
                            InitialCondition("poly2d"), alpha=10.0,
                            reconstruction=ReconstructionSpec("bilinear_grid_2d"))


def alpha_sweep(cfg: ExperimentConfig, alphas=HEAT2D_SWEEP_ALPHAS) -> list[ExperimentConfig]:
    return [replace(cfg, name=f"{cfg.name}-alpha{a:g}", alpha=float(a)) for a in alphas]


# -- metrics ---------------------------------------------------------------

def l1_error_over_time(traj: Trajectory, predictions: np.ndarray) -> np.ndarray:
    """Trapezoidal L1 distance between ``z_{k+1}`` and the ``k``-th prediction."""
    predictions = np.asarray(predictions, dtype=float)
    truth = traj.snapshots[1:]
    if predictions.shape != truth.shape:
        raise ValueError(f"predictions have shape {predictions.shape}, expected {truth.shape}")
    return np.abs(truth - predictions) @ traj.grid.quad_weights


def open_loop_predictions(traj, w, model, spec) -> np.ndarray:
    """``f_n(f_r(z_k, omega))`` for ``k = 0 .. K-1`` (never fed back)."""
    Zr = reconstruct_many(traj.snapshots[:-1], w, spec)
    return model.predict_many(stack_history(Zr, model.history))


# -- pipeline --------------------------------------------------------------

class ExperimentError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trajectory: Trajectory
    model: Model
    loss_history: np.ndarray
    weights: SensorWeights
    trace: OptimizationTrace
    cost_final: CostReport
    cost_all_ones: CostReport
    predictions: np.ndarray  # open-loop, shape (K, c)
    l1_error: np.ndarray
    version: str = __version__
    files: dict[str, Path] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return self.config.hash()

    @property
    def coverage(self) -> float:
        return self.weights.coverage

    def summary(self) -> dict:
        cov = coverage_report(self.weights)
        return {
            "name": self.config.name,
            "config_hash": self.config_hash,
            "seed": self.config.rng_seed,
            "version": self.version,
            "alpha": self.config.alpha,
            "c": self.trajectory.grid.c,
            "coverage": cov.coverage,
            "n_sensors": cov.n_active,
            "J_final": self.cost_final.total,
            "J_final_sensor_term": self.cost_final.sensor_term,
            "J_final_error_term": self.cost_final.error_term,
            "J_all_ones": self.cost_all_ones.total,
            "J_initial": float(self.trace.records[0].J),
            "optimizer_status": self.trace.status,
            "optimizer_iterations": self.trace.records[-1].iter,
            "final_training_loss": float(self.loss_history[-1]),
            "l1_error_max": float(self.l1_error.max()),
            "l1_error_mean": float(self.l1_error.mean()),
        }


def build_model(cfg: ExperimentConfig) -> Model:
    rng = np.random.default_rng(cfg.rng_seed)
    grid = cfg.grid
    if grid.dim == 2:
        return Conv1.init(grid.shape, rng)
    return Dense2.init(grid.c, rng, history=cfg.history)


def run_experiment(cfg: ExperimentConfig, out_dir=None, *, stop_after: str | None = None):
    """Simulate, train, optimize and measure; write artifacts if an output directory is set.

    ``stop_after`` may be ``"simulate"`` or ``"train"`` to run only a prefix of the
    pipeline; the partial result is returned as a dict.
    """
    out = Path(out_dir or cfg.output_dir) if (out_dir or cfg.output_dir) else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        save_config(cfg, out / "config.json")
    stage = "config"
    try:
        check_stability(cfg.model, cfg.grid, cfg.dt)
        grid = cfg.grid

        stage = "simulate"
        traj = simulate(cfg.model, cfg.initial_condition, grid, cfg.dt, cfg.K)
        if out is not None:
            np.savez(out / "trajectory.npz", snapshots=traj.snapshots, dt=traj.dt)
        if stop_after == "simulate":
            return {"trajectory": traj}

        stage = "train"
        model, hist = train(build_model(cfg), make_dataset(traj, cfg.history), cfg.training)
        if out is not None:
            save_model(model, out / "model.npz")
            _write_csv(out / "training_loss.csv", ["epoch", "loss"],
                       ([e, repr(float(v))] for e, v in enumerate(hist.loss)))
        if stop_after == "train":
            return {"trajectory": traj, "model": model, "loss_history": hist.loss}

        stage = "optimize"
        params = CostParams.for_trajectory(traj, cfg.alpha)
        try:
            w, trace = optimize(traj, model, cfg.reconstruction, params, cfg.optimizer)
        except OptimizationError as exc:
            if out is not None:
                (out / "cost_trace.csv").write_text(exc.trace.to_csv())
            raise

        stage = "metrics"
        preds = open_loop_predictions(traj, w, model, cfg.reconstruction)
        result = ExperimentResult(
            config=cfg, trajectory=traj, model=model, loss_history=hist.loss, weights=w,
            trace=trace,
            cost_final=evaluate_cost(traj, w, model, cfg.reconstruction, params),
            cost_all_ones=evaluate_cost(traj, SensorWeights.full(grid), model,
                                        cfg.reconstruction, params),
            predictions=preds, l1_error=l1_error_over_time(traj, preds),
        )

        if out is not None:
            stage = "export"
            result.files = export_plot_data(result, out)
        return result
    except ExperimentError:
        raise
    except Exception as exc:
        raise ExperimentError(stage, exc) from exc


# -- export ----------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([r if isinstance(r, str) else _fmt(r) for r in row])
    return path


def export_plot_data(result: ExperimentResult, out_dir) -> dict[str, Path]:
    """Write the CSV bundle and a JSON manifest. Re-exporting gives identical bytes."""
    out = Path(out_dir)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    traj, grid = result.trajectory, result.trajectory.grid
    coords = grid.coordinates()
    coord_names = ["x"] if grid.dim == 1 else ["x", "y"]
    mask = result.weights.mask
    files = {}

    cost_path = out / "cost_trace.csv"
    cost_path.write_text(result.trace.to_csv())
    files["cost_trace"] = cost_path

    K = traj.K
    files["l1_error"] = _write_csv(
        out / "l1_error.csv", ["step", "t", "l1_error"],
        ((k + 1, (k + 1) * traj.dt, e) for k, e in enumerate(result.l1_error)))

    files["sensors"] = _write_csv(
        out / "sensors.csv", ["index", *coord_names, "omega", "sensor_active"],
        ((i, *(c[i] for c in coords), result.weights.omega[i], bool(mask[i]))
         for i in range(grid.c)))

    for k in result.config.steps_to_dump:
        if not 0 <= k <= K:
            continue
        u_r = traj.snapshots[k]
        # no prediction exists for the initial state
        u_p = result.predictions[k - 1] if k > 0 else np.full(grid.c, np.nan)
        path = out / "snapshots" / f"step_{k:05d}.csv"
        _write_csv(path, [*coord_names, "u_r", "u_p", "sensor_active"],
                   ((*(c[i] for c in coords), u_r[i], u_p[i], bool(mask[i]))
                    for i in range(grid.c)))
        files[f"snapshot_{k}"] = path

    manifest = out / "manifest.json"
    manifest.write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
    files["manifest"] = manifest
    return files
