"""Feedforward MLP: activations, forward pass, MSE fitness, gradients and the
two trainers (backpropagation with momentum, scaled conjugate gradient).

Weights are stored as a tuple of matrices, one per layer.  Matrix ``t`` has
shape ``(fan_in + 1, fan_out)``; its last row multiplies a constant 1 input
and acts as the bias.
"""

from __future__ import annotations

import enum
import functools
import math
import sys
from dataclasses import dataclass, field

import numpy as np

WORST_FITNESS = sys.float_info.max
INIT_RANGE = (-0.05, 0.05)
MAX_HIDDEN_LAYERS = 3
MAX_UNITS = 12
MAX_EPOCHS = 50

BP_RATE_RANGE = (0.05, 0.25)
BP_MOMENTUM_RANGE = (0.05, 0.25)
SCG_SIGMA_RANGE = (0.0, 1.0e-4)
SCG_LAMBDA_RANGE = (0.0, 1.0e-6)

# A zero sigma would make the curvature probe a 0/0; floor it.
SCG_MIN_SIGMA = 1e-8

Weights = tuple  # tuple[np.ndarray, ...]


class NetworkError(ValueError):
    pass


class TrainingDiverged(ArithmeticError):
    pass


class Activation(str, enum.Enum):
    FL = "FL"
    FTH = "FTH"
    FLS = "FLS"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return _ACT[self](x)

    def derivative_from_output(self, y: np.ndarray) -> np.ndarray:
        d = _DACT[self]
        return np.ones_like(y) if d is None else d(y)


def _identity(x):
    return x


def _logistic(x):
    # tanh form is overflow-free and cheaper than expit on small arrays
    return 0.5 * (1.0 + np.tanh(0.5 * x))


_ACT = {Activation.FL: _identity, Activation.FTH: np.tanh, Activation.FLS: _logistic}
_DACT = {
    Activation.FL: None,
    Activation.FTH: lambda y: 1.0 - y * y,
    Activation.FLS: lambda y: y * (1.0 - y),
}


@dataclass(frozen=True)
class Architecture:
    """Layer layout of an MLP; the output layer is always linear.

    ``hidden`` is a tuple of ``(size, Activation)`` pairs.  An empty tuple is
    accepted and gives a plain affine model, which the search never produces
    but is handy where a convex objective is wanted.
    """

    input_dim: int
    output_dim: int
    hidden: tuple = ()

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise NetworkError("input and output dimensions must be positive")
        if len(self.hidden) > MAX_HIDDEN_LAYERS:
            raise NetworkError(f"at most {MAX_HIDDEN_LAYERS} hidden layers, got {len(self.hidden)}")
        hidden = tuple((int(s), Activation(a)) for s, a in self.hidden)
        for size, _ in hidden:
            if not 1 <= size <= MAX_UNITS:
                raise NetworkError(f"hidden layer size {size} outside [1, {MAX_UNITS}]")
        object.__setattr__(self, "hidden", hidden)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dim] + [s for s, _ in self.hidden] + [self.output_dim]

    @property
    def activations(self) -> list[Activation]:
        return [a for _, a in self.hidden] + [Activation.FL]

    @property
    def shapes(self) -> list[tuple[int, int]]:
        sizes = self.layer_sizes
        return [(sizes[i] + 1, sizes[i + 1]) for i in range(len(sizes) - 1)]

    @property
    def n_weights(self) -> int:
        return sum(r * c for r, c in self.shapes)


@dataclass(frozen=True)
class TrainConfig:
    algorithm: str = "SCG"
    bp_rate: float = 0.15
    bp_momentum: float = 0.15
    scg_sigma: float = 5.0e-5
    scg_lambda: float = 5.0e-7
    max_epochs: int = MAX_EPOCHS
    patience: int = 5

    def __post_init__(self):
        if self.algorithm not in ("BP", "SCG"):
            raise NetworkError(f"unknown training algorithm {self.algorithm!r}")
        if not 0 <= self.max_epochs <= MAX_EPOCHS:
            raise NetworkError(f"max_epochs must lie in [0, {MAX_EPOCHS}]")
        if self.patience < 1:
            raise NetworkError("patience must be positive")


@dataclass(frozen=True)
class DataSplit:
    """Train / validation / test parts, each a ``(features, one-hot targets)`` pair."""

    train: tuple
    validation: tuple
    test: tuple

    def __post_init__(self):
        widths = {part[0].shape[1] for part in (self.train, self.validation, self.test)}
        if len(widths) != 1:
            raise NetworkError(f"inconsistent feature counts across parts: {sorted(widths)}")

    @property
    def input_dim(self) -> int:
        return self.train[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.train[1].shape[1]


@dataclass
class History:
    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    best_epoch: int = 0
    stopped: str = ""

    @property
    def epochs(self) -> int:
        return len(self.train_mse) - 1


def init_weights(arch: Architecture, rng: np.random.Generator) -> Weights:
    lo, hi = INIT_RANGE
    return tuple(rng.uniform(lo, hi, size=shape) for shape in arch.shapes)


def check_shapes(arch: Architecture, weights) -> None:
    shapes = arch.shapes
    if len(weights) != len(shapes):
        raise NetworkError(f"expected {len(shapes)} weight matrices, got {len(weights)}")
    for i, (w, shape) in enumerate(zip(weights, shapes)):
        if w.shape != shape:
            raise NetworkError(f"weight matrix {i} has shape {w.shape}, expected {shape}")


@functools.lru_cache(maxsize=64)
def _ones(n: int) -> np.ndarray:
    return np.ones(n)


@functools.lru_cache(maxsize=None)
def _tables(arch: Architecture):
    acts = arch.activations
    return [_ACT[a] for a in acts], [_DACT[a] for a in acts]


def _forward_all(arch: Architecture, weights, x: np.ndarray) -> list[np.ndarray]:
    outs = [x]
    for w, act in zip(weights, _tables(arch)[0]):
        outs.append(act(outs[-1] @ w[:-1] + w[-1]))
    return outs


def forward(arch: Architecture, weights, x: np.ndarray) -> np.ndarray:
    check_shapes(arch, weights)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != arch.input_dim:
        raise NetworkError(f"input batch shape {x.shape} incompatible with input_dim {arch.input_dim}")
    return _forward_all(arch, weights, x)[-1]


def mse(arch: Architecture, weights, part) -> float:
    """Mean squared error over examples and output units, as a percentage."""
    x, t = part
    if len(x) == 0:
        raise NetworkError("cannot compute MSE on an empty set")
    y = forward(arch, weights, x)
    if y.shape != t.shape:
        raise NetworkError(f"target shape {t.shape} does not match output shape {y.shape}")
    return 100.0 * float(np.mean((y - t) ** 2))


def _loss_and_grad(arch, weights, x, t):
    outs = _forward_all(arch, weights, x)
    err = outs[-1] - t
    flat = err.ravel()
    loss = float(flat @ flat) / flat.size
    delta = (2.0 / flat.size) * err
    grads = [None] * len(weights)
    dacts = _tables(arch)[1]
    for i in range(len(weights) - 1, -1, -1):
        if dacts[i] is not None:
            delta = delta * dacts[i](outs[i + 1])
        g = np.empty(weights[i].shape)
        np.dot(outs[i].T, delta, out=g[:-1])
        np.dot(_ones(len(delta)), delta, out=g[-1])
        grads[i] = g
        if i:
            delta = delta @ weights[i][:-1].T
    return loss, tuple(grads)


def gradient(arch: Architecture, weights, batch) -> Weights:
    """Exact gradient of the (non-percent) MSE with respect to every weight."""
    check_shapes(arch, weights)
    x, t = batch
    return _loss_and_grad(arch, weights, np.asarray(x, float), np.asarray(t, float))[1]


def flatten(weights) -> np.ndarray:
    return np.concatenate([w.ravel() for w in weights])


def unflatten(vec: np.ndarray, arch: Architecture) -> Weights:
    out, pos = [], 0
    for r, c in arch.shapes:
        out.append(vec[pos:pos + r * c].reshape(r, c))
        pos += r * c
    return tuple(out)


class _EarlyStopper:
    """Tracks the best-validation weights and the patience counter."""

    def __init__(self, arch, split, weights, patience, history):
        self.arch, self.patience, self.history = arch, patience, history
        (xt, tt), (xv, tv) = split.train, split.validation
        self.x = np.vstack([xt, xv])
        self.t = np.vstack([tt, tv])
        self.n_train = len(xt)
        if not len(xt) or not len(xv):
            raise NetworkError("training and validation sets must be non-empty")
        self.best_val = math.inf
        self.best = weights
        self.stale = 0
        self.observe(weights, 0)

    def observe(self, weights, epoch) -> bool:
        err = _forward_all(self.arch, weights, self.x)[-1] - self.t
        et, ev = err[: self.n_train].ravel(), err[self.n_train:].ravel()
        tr = 100.0 * float(et @ et) / et.size
        va = 100.0 * float(ev @ ev) / ev.size
        if not (math.isfinite(tr) and math.isfinite(va)):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
        self.history.train_mse.append(tr)
        self.history.val_mse.append(va)
        if va < self.best_val:
            self.best_val, self.best, self.stale = va, weights, 0
            self.history.best_epoch = epoch
        else:
            self.stale += 1
        if self.stale >= self.patience:
            self.history.stopped = "patience"
            return True
        return False


def train_bp(arch, weights, split: DataSplit, cfg: TrainConfig, rng=None):
    """Full-batch gradient descent with momentum and validation early stopping."""
    check_shapes(arch, weights)
    x, t = split.train
    history = History()
    stopper = _EarlyStopper(arch, split, weights, cfg.patience, history)
    w = [m.copy() for m in weights]
    velocity = [np.zeros_like(m) for m in w]
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.max_epochs + 1):
            _, grads = _loss_and_grad(arch, w, x, t)
            for i, g in enumerate(grads):
                velocity[i] = cfg.bp_momentum * velocity[i] - cfg.bp_rate * g
                w[i] = w[i] + velocity[i]
            if stopper.observe(tuple(w), epoch):
                break
        else:
            history.stopped = "max_epochs"
    return stopper.best, history


def train_scg(arch, weights, split: DataSplit, cfg: TrainConfig, rng=None):
    """Moller's scaled conjugate gradient over the full training batch.

    One epoch is one SCG iteration (one curvature probe and one trial step).
    """
    check_shapes(arch, weights)
    x, t = split.train
    history = History()
    stopper = _EarlyStopper(arch, split, weights, cfg.patience, history)

    def fg(vec):
        loss, grads = _loss_and_grad(arch, unflatten(vec, arch), x, t)
        return loss, flatten(grads)

    n = arch.n_weights
    sigma = max(cfg.scg_sigma, SCG_MIN_SIGMA)
    lam, lam_bar = cfg.scg_lambda, 0.0
    w = flatten(weights)
    err, g = fg(w)
    r = -g
    p = r.copy()
    success = True
    delta = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.max_epochs + 1):
            p2 = float(p @ p)
            if p2 == 0.0 or not np.any(r):
                history.stopped = "zero_gradient"
                break
            if success:
                sigma_k = sigma / math.sqrt(p2)
                _, g_probe = fg(w + sigma_k * p)
                s = (g_probe - g) / sigma_k
                delta = float(p @ s)
            delta += (lam - lam_bar) * p2
            if delta <= 0:
                lam_bar = 2.0 * (lam - delta / p2)
                delta = -delta + lam * p2
                lam = lam_bar
            mu = float(p @ r)
            alpha = mu / delta
            w_new = w + alpha * p
            err_new, g_new = fg(w_new)
            if not math.isfinite(err_new):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            comparison = 2.0 * delta * (err - err_new) / (mu * mu) if mu else -1.0
            if comparison >= 0:
                r_new = -g_new
                lam_bar, success = 0.0, True
                if epoch % n == 0:
                    p_new = r_new
                else:
                    beta = (float(r_new @ r_new) - float(r_new @ r)) / mu
                    p_new = r_new + beta * p
                w, err, g, r, p = w_new, err_new, g_new, r_new, p_new
                if comparison >= 0.75:
                    lam *= 0.25
            else:
                lam_bar, success = lam, False
            if comparison < 0.25:
                lam += delta * (1.0 - comparison) / p2
            if stopper.observe(unflatten(w, arch), epoch):
                break
        else:
            history.stopped = "max_epochs"
    return stopper.best, history


def train(arch, weights, split: DataSplit, cfg: TrainConfig, rng=None):
    trainer = train_bp if cfg.algorithm == "BP" else train_scg
    return trainer(arch, weights, split, cfg, rng)
