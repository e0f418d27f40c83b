"""Linear one-step predictors, trained with Adam on an MSE loss.

Three model families share one small interface (``predict_many``, ``vjp``,
``input_jacobian``, ``params``):

* :class:`Dense2` -- two dense layers of width ``c`` with identity activation,
  kernels stored input-major as ``(n_in, n_out)``.
* :class:`Conv1` -- a single 3x3 filter with zero padding on a 2D field.
* :class:`AffinePredictor` -- an explicit matrix and bias, e.g. the simulator's
  own step operator.

All of them are affine in their input, so the input Jacobian is constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .pde import Trajectory

CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    pass


def _glorot_uniform(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Dense2:
    """``f(x) = W2^T (W1^T x + b1) + b2``.

    With ``history > 1`` the input is the concatenation of the current state and
    ``history - 1`` previous states (an extension for second-order-in-time
    models; the default single-snapshot input is ``history=1``).
    """

    arch = "dense2"

    def __init__(self, W1, b1, W2, b2, history: int = 1):
        self.W1 = np.asarray(W1, dtype=float)
        self.b1 = np.asarray(b1, dtype=float)
        self.W2 = np.asarray(W2, dtype=float)
        self.b2 = np.asarray(b2, dtype=float)
        self.history = int(history)
        c = self.W2.shape[1]
        if self.W1.shape != (self.history * c, self.W2.shape[0]) or self.b2.shape != (c,):
            raise ValueError("inconsistent Dense2 parameter shapes")

    @classmethod
    def init(cls, c: int, rng: np.random.Generator, history: int = 1) -> Dense2:
        n_in = history * c
        W1 = _glorot_uniform(rng, n_in, c, (n_in, c))
        W2 = _glorot_uniform(rng, c, c, (c, c))
        return cls(W1, np.zeros(c), W2, np.zeros(c), history)

    @classmethod
    def identity(cls, c: int) -> Dense2:
        return cls(np.eye(c), np.zeros(c), np.eye(c), np.zeros(c))

    @property
    def n_in(self) -> int:
        return self.W1.shape[0]

    @property
    def n_out(self) -> int:
        return self.W2.shape[1]

    @property
    def params(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def with_params(self, params) -> Dense2:
        return Dense2(params["W1"], params["b1"], params["W2"], params["b2"], self.history)

    def predict_many(self, X):
        return (X @ self.W1 + self.b1) @ self.W2 + self.b2

    def vjp(self, V):
        return (V @ self.W2.T) @ self.W1.T

    def input_jacobian(self, x=None) -> np.ndarray:
        return (self.W1 @ self.W2).T

    def loss_and_grads(self, X, Y):
        H = X @ self.W1 + self.b1
        R = H @ self.W2 + self.b2 - Y
        loss = float(np.mean(R**2))
        dY = (2.0 / R.size) * R
        dH = dY @ self.W2.T
        grads = {"W1": X.T @ dH, "b1": dH.sum(axis=0), "W2": H.T @ dY, "b2": dY.sum(axis=0)}
        return loss, grads


class Conv1:
    """One 3x3 filter (cross-correlation, zero padding) plus a scalar bias."""

    arch = "conv1"
    history = 1

    def __init__(self, kernel, bias, shape: tuple[int, int]):
        self.kernel = np.asarray(kernel, dtype=float).reshape(3, 3)
        self.bias = np.asarray(bias, dtype=float).reshape(())
        self.shape = (int(shape[0]), int(shape[1]))

    @classmethod
    def init(cls, shape, rng: np.random.Generator) -> Conv1:
        return cls(_glorot_uniform(rng, 9, 9, (3, 3)), 0.0, shape)

    @classmethod
    def identity(cls, shape) -> Conv1:
        k = np.zeros((3, 3))
        k[1, 1] = 1.0
        return cls(k, 0.0, shape)

    @property
    def n_in(self) -> int:
        return self.shape[0] * self.shape[1]

    n_out = n_in

    @property
    def params(self) -> dict[str, np.ndarray]:
        return {"kernel": self.kernel, "bias": self.bias}

    def with_params(self, params) -> Conv1:
        return Conv1(params["kernel"], params["bias"], self.shape)

    def _padded(self, X):
        ny, nx = self.shape
        Xp = np.zeros((X.shape[0], ny + 2, nx + 2))
        Xp[:, 1:-1, 1:-1] = X.reshape(-1, ny, nx)
        return Xp

    def predict_many(self, X):
        ny, nx = self.shape
        Xp = self._padded(X)
        out = np.full((X.shape[0], ny, nx), float(self.bias))
        for a in range(3):
            for b in range(3):
                out += self.kernel[a, b] * Xp[:, a:a + ny, b:b + nx]
        return out.reshape(X.shape[0], -1)

    def vjp(self, V):
        ny, nx = self.shape
        Gp = np.zeros((V.shape[0], ny + 2, nx + 2))
        V3 = V.reshape(-1, ny, nx)
        for a in range(3):
            for b in range(3):
                Gp[:, a:a + ny, b:b + nx] += self.kernel[a, b] * V3
        return Gp[:, 1:-1, 1:-1].reshape(V.shape[0], -1)

    def input_jacobian(self, x=None) -> sp.csr_matrix:
        """Sparse banded matrix of the stencil; edge rows keep only in-bounds taps."""
        ny, nx = self.shape
        I, J = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
        rows, cols, vals = [], [], []
        for a in range(3):
            for b in range(3):
                ii, jj = I + a - 1, J + b - 1
                ok = (ii >= 0) & (ii < ny) & (jj >= 0) & (jj < nx)
                rows.append((I * nx + J)[ok])
                cols.append((ii * nx + jj)[ok])
                vals.append(np.full(ok.sum(), self.kernel[a, b]))
        n = ny * nx
        M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
        M.sort_indices()
        return M

    def loss_and_grads(self, X, Y):
        ny, nx = self.shape
        Xp = self._padded(X)
        R = (self.predict_many(X) - Y).reshape(-1, ny, nx)
        loss = float(np.mean(R**2))
        dY = (2.0 / R.size) * R
        gk = np.empty((3, 3))
        for a in range(3):
            for b in range(3):
                gk[a, b] = np.sum(dY * Xp[:, a:a + ny, b:b + nx])
        return loss, {"kernel": gk, "bias": np.asarray(dY.sum())}


class AffinePredictor:
    """``f(x) = M x + b`` for an explicit (dense or sparse) matrix ``M``."""

    arch = "affine"
    history = 1

    def __init__(self, matrix, bias=None):
        self.matrix = matrix if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
        self.bias = None if bias is None else np.asarray(bias, dtype=float)

    @property
    def n_in(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_out(self) -> int:
        return self.matrix.shape[0]

    @property
    def params(self) -> dict[str, np.ndarray]:
        M = self.matrix
        if sp.issparse(M):
            M = M.tocsr()
            p = {"data": M.data, "indices": M.indices, "indptr": M.indptr,
                 "shape": np.asarray(M.shape)}
        else:
            p = {"matrix": M}
        if self.bias is not None:
            p["bias"] = self.bias
        return p

    @classmethod
    def from_params(cls, p) -> AffinePredictor:
        if "matrix" in p:
            M = p["matrix"]
        else:
            M = sp.csr_matrix((p["data"], p["indices"], p["indptr"]), shape=tuple(p["shape"]))
        return cls(M, p.get("bias"))

    def predict_many(self, X):
        Y = np.asarray((self.matrix @ X.T).T)
        return Y if self.bias is None else Y + self.bias

    def vjp(self, V):
        return np.asarray((self.matrix.T @ V.T).T)

    def input_jacobian(self, x=None):
        return self.matrix


Model = Dense2 | Conv1 | AffinePredictor


def predict(model: Model, x) -> np.ndarray:
    """One-step prediction for a single state (or stacked history) vector."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.n_in:
        raise ValueError(f"model expects input of length {model.n_in}, got {x.size}")
    return model.predict_many(x[None, :])[0]


def input_jacobian(model: Model, x=None):
    """Exact Jacobian of the prediction w.r.t. its input (constant for these models)."""
    return model.input_jacobian(x)


# -- data ------------------------------------------------------------------

class Dataset(NamedTuple):
    X: np.ndarray  # inputs, (n_pairs, n_in)
    Y: np.ndarray  # targets, (n_pairs, c)


def stack_history(Z: np.ndarray, history: int) -> np.ndarray:
    """Rows ``[z_k, z_{k-1}, ...]`` for every ``k``; indices before 0 repeat ``z_0``."""
    if history == 1:
        return Z
    blocks = [Z]
    for lag in range(1, history):
        blocks.append(np.concatenate([np.repeat(Z[:1], lag, axis=0), Z[:-lag]]))
    return np.concatenate(blocks, axis=1)


def make_dataset(trajectories: Sequence[Trajectory] | Trajectory, history: int = 1) -> Dataset:
    """Consecutive pairs ``(z_k, z_{k+1})`` from every trajectory, in order."""
    if isinstance(trajectories, Trajectory):
        trajectories = [trajectories]
    if not trajectories:
        raise ValueError("no trajectories given")
    X, Y = [], []
    for traj in trajectories:
        Z = traj.snapshots
        if Z.shape[0] < 2:
            raise ValueError("every trajectory needs at least two snapshots")
        X.append(stack_history(Z, history)[:-1])
        Y.append(Z[1:])
    return Dataset(np.concatenate(X), np.concatenate(Y))


# -- training --------------------------------------------------------------

@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 2000
    batch_size: int | None = None  # None = full batch
    rng_seed: int = 0
    validation_fraction: float = 0.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in [0, 1)")


class TrainingHistory(NamedTuple):
    loss: np.ndarray
    val_loss: np.ndarray | None


def train(model: Model, dataset: Dataset, cfg: TrainingConfig = TrainingConfig()):
    """Fit ``model`` to ``dataset`` with Adam on the MSE loss.

    Returns ``(trained_model, history)``; the input model is left untouched.
    ``history.loss[e]`` is the mean training loss over the batches of epoch ``e``.
    """
    X, Y = (np.asarray(a, dtype=float) for a in dataset)
    if X.shape[0] == 0:
        raise ValueError("empty dataset")
    if X.shape[1] != model.n_in or Y.shape[1] != model.n_out:
        raise ValueError(f"dataset shapes {X.shape}->{Y.shape} do not fit the model")
    rng = np.random.default_rng(cfg.rng_seed)

    n_val = int(round(cfg.validation_fraction * X.shape[0]))
    if n_val:
        perm = rng.permutation(X.shape[0])
        Xv, Yv = X[perm[:n_val]], Y[perm[:n_val]]
        X, Y = X[perm[n_val:]], Y[perm[n_val:]]
    n = X.shape[0]
    batch = n if cfg.batch_size is None else min(cfg.batch_size, n)

    params = {k: np.array(v, dtype=float) for k, v in model.params.items()}
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    b1, b2 = cfg.beta1, cfg.beta2
    losses, val_losses = [], []
    t = 0
    current = model
    for epoch in range(cfg.epochs):
        order = np.arange(n) if batch == n else rng.permutation(n)
        batch_losses = []
        for start in range(0, n, batch):
            sel = order[start:start + batch]
            loss, grads = current.loss_and_grads(X[sel], Y[sel])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"loss became {loss} at epoch {epoch}; lower the learning rate "
                    f"(currently {cfg.learning_rate})"
                )
            batch_losses.append(loss)
            t += 1
            for k, g in grads.items():
                m[k] = b1 * m[k] + (1 - b1) * g
                v[k] = b2 * v[k] + (1 - b2) * g * g
                m_hat = m[k] / (1 - b1**t)
                v_hat = v[k] / (1 - b2**t)
                params[k] = params[k] - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
            current = current.with_params(params)
        losses.append(float(np.mean(batch_losses)))
        if n_val:
            val_losses.append(float(np.mean((current.predict_many(Xv) - Yv) ** 2)))
    history = TrainingHistory(np.array(losses), np.array(val_losses) if n_val else None)
    return current, history


def effective_matrix(model: Model) -> np.ndarray:
    J = model.input_jacobian()
    return J.toarray() if sp.issparse(J) else np.asarray(J)


# -- checkpoints -----------------------------------------------------------

def save_model(model: Model, path) -> Path:
    """Write ``model`` to an ``.npz`` checkpoint (bit-exact round trip)."""
    path = Path(path)
    meta = {"format_version": np.asarray(CHECKPOINT_VERSION), "arch": np.asarray(model.arch),
            "history": np.asarray(model.history)}
    if isinstance(model, Conv1):
        meta["grid_shape"] = np.asarray(model.shape)
    arrays = {f"param_{k}": np.asarray(v) for k, v in model.params.items()}
    with open(path, "wb") as fh:
        np.savez(fh, **meta, **arrays)
    return path


def load_model(path) -> Model:
    with np.load(path, allow_pickle=False) as f:
        version = int(f["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        arch = str(f["arch"])
        p = {k[len("param_"):]: f[k] for k in f.files if k.startswith("param_")}
        if arch == "dense2":
            return Dense2(p["W1"], p["b1"], p["W2"], p["b2"], int(f["history"]))
        if arch == "conv1":
            return Conv1(p["kernel"], p["bias"], tuple(f["grid_shape"]))
        if arch == "affine":
            return AffinePredictor.from_params(p)
    raise ValueError(f"unknown architecture {arch!r}")
