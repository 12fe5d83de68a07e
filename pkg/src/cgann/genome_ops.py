"""Variation operators for the three populations.

* weight genomes (initial weights): row-slice crossover and sparse additive mutation
* architecture genomes: pooled-layer crossover and layer-count / size mutation
* rule genomes (trainer parameters): interval crossover and +-10% mutation
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .lattice import Cell, Lattice, mutation_count
from .network import (
    BP_MOMENTUM_RANGE,
    BP_RATE_RANGE,
    MAX_HIDDEN_LAYERS,
    MAX_UNITS,
    SCG_LAMBDA_RANGE,
    SCG_SIGMA_RANGE,
    Activation,
    Architecture,
    TrainConfig,
)

ACTIVATIONS = (Activation.FL, Activation.FTH, Activation.FLS)

PARAM_RANGES = {
    "BP": (BP_RATE_RANGE, BP_MOMENTUM_RANGE),
    "SCG": (SCG_SIGMA_RANGE, SCG_LAMBDA_RANGE),
}


class GenomeError(ValueError):
    pass


@dataclass(frozen=True)
class OperatorConfig:
    probs: float = 0.5
    mutation_rate: float = 10.0
    fx: tuple = (-0.5, 0.5)
    arqval: tuple = (-2, 5)

    def __post_init__(self):
        if not 0.0 <= self.probs <= 1.0:
            raise GenomeError(f"probs must lie in [0, 1], got {self.probs}")
        if not 0.0 <= self.mutation_rate <= 100.0:
            raise GenomeError(f"mutation rate must lie in [0, 100], got {self.mutation_rate}")
        if self.fx[0] > self.fx[1] or self.arqval[0] > self.arqval[1]:
            raise GenomeError("mutation ranges must be ordered (low, high)")


@dataclass(frozen=True)
class ArchGenome:
    dims: tuple
    funcs: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        funcs = tuple(Activation(f) for f in self.funcs)
        if not 1 <= len(dims) <= MAX_HIDDEN_LAYERS:
            raise GenomeError(f"hidden layer count {len(dims)} outside [1, {MAX_HIDDEN_LAYERS}]")
        if len(dims) != len(funcs):
            raise GenomeError("dims and funcs must pair up")
        if any(not 1 <= d <= MAX_UNITS for d in dims):
            raise GenomeError(f"layer sizes {dims} outside [1, {MAX_UNITS}]")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "funcs", funcs)

    @property
    def n_layers(self) -> int:
        return len(self.dims)

    def structure(self) -> tuple:
        return self.dims

    def to_architecture(self, input_dim: int, output_dim: int) -> Architecture:
        return Architecture(input_dim, output_dim, tuple(zip(self.dims, self.funcs)))

    def describe(self) -> str:
        return "-".join(f"{d}{f.value}" for d, f in zip(self.dims, self.funcs))


@dataclass(frozen=True)
class RuleGenome:
    algorithm: str
    params: tuple

    def __post_init__(self):
        if self.algorithm not in PARAM_RANGES:
            raise GenomeError(f"unknown learning algorithm {self.algorithm!r}")
        params = tuple(float(p) for p in self.params)
        if len(params) != 2:
            raise GenomeError("rule genomes carry exactly two parameters")
        for value, (lo, hi) in zip(params, PARAM_RANGES[self.algorithm]):
            if not lo <= value <= hi:
                raise GenomeError(f"{self.algorithm} parameter {value} outside [{lo}, {hi}]")
        object.__setattr__(self, "params", params)

    def train_config(self, max_epochs: int, patience: int) -> TrainConfig:
        if self.algorithm == "BP":
            rate, momentum = self.params
            return TrainConfig("BP", bp_rate=rate, bp_momentum=momentum,
                               max_epochs=max_epochs, patience=patience)
        sigma, lam = self.params
        return TrainConfig("SCG", scg_sigma=sigma, scg_lambda=lam,
                           max_epochs=max_epochs, patience=patience)

    def describe(self) -> dict:
        names = ("rate", "momentum") if self.algorithm == "BP" else ("sigma", "lambda")
        return {"algorithm": self.algorithm, **dict(zip(names, self.params))}


def random_arch(rng: np.random.Generator) -> ArchGenome:
    n = int(rng.integers(1, MAX_HIDDEN_LAYERS + 1))
    return ArchGenome(tuple(int(d) for d in rng.integers(1, MAX_UNITS + 1, size=n)),
                      tuple(ACTIVATIONS[i] for i in rng.integers(0, len(ACTIVATIONS), size=n)))


def random_rule(algorithm: str, rng: np.random.Generator) -> RuleGenome:
    return RuleGenome(algorithm, tuple(rng.uniform(lo, hi) for lo, hi in PARAM_RANGES[algorithm]))


# --------------------------------------------------------------------------- weights

def fatia2(a: np.ndarray, b: np.ndarray, pattern: int) -> np.ndarray:
    """Two row-halves; pattern 0 -> [a_top; b_bot], 1 -> [b_top; a_bot]."""
    first, second = (a, b) if pattern == 0 else (b, a)
    top = -(-a.shape[0] // 2)
    return np.vstack([first[:top], second[top:]])


def fatia3(a: np.ndarray, b: np.ndarray, pattern: int) -> np.ndarray:
    """Three row-slices; pattern 0 -> [a; b; a], 1 -> [b; a; b]."""
    outer, middle = (a, b) if pattern == 0 else (b, a)
    i, j = _third_bounds(a.shape[0])
    return np.vstack([outer[:i], middle[i:j], outer[j:]])


def _third_bounds(rows: int) -> tuple[int, int]:
    base, extra = divmod(rows, 3)
    first = base + (extra > 0)
    return first, first + base + (extra > 1)


def crossover_ppi(a, b, cfg: OperatorConfig, rng: np.random.Generator):
    if len(a) != len(b):
        raise GenomeError(f"parents have {len(a)} and {len(b)} matrices")
    child = []
    for i, (ma, mb) in enumerate(zip(a, b)):
        if ma.shape != mb.shape:
            raise GenomeError(f"matrix {i} shapes differ: {ma.shape} vs {mb.shape}")
        slicer = fatia2 if rng.random() > cfg.probs else fatia3
        child.append(slicer(ma, mb, int(rng.integers(2))))
    return tuple(child)


def sparse_perturbation(shape, cfg: OperatorConfig, rng: np.random.Generator) -> np.ndarray:
    size = int(np.prod(shape))
    k = min(size, math.ceil(cfg.mutation_rate / 100.0 * size))
    out = np.zeros(size)
    if k:
        out[rng.choice(size, size=k, replace=False)] = rng.uniform(cfg.fx[0], cfg.fx[1], size=k)
    return out.reshape(shape)


def mutate_weights(genome, cfg: OperatorConfig, rng: np.random.Generator):
    return tuple(m + sparse_perturbation(m.shape, cfg, rng) for m in genome)


def _mutate_selected(children: Sequence, cfg: OperatorConfig, rng, one: Callable) -> list:
    out = list(children)
    k = mutation_count(len(out), cfg.mutation_rate)
    for i in (rng.choice(len(out), size=k, replace=False) if k else ()):
        out[i] = one(out[i], cfg, rng)
    return out


def mutate_ppi(children: Sequence, cfg: OperatorConfig, rng: np.random.Generator) -> list:
    """Mutate exactly round(m/100 * n) children, drawn without replacement."""
    return _mutate_selected(children, cfg, rng, mutate_weights)


# --------------------------------------------------------------------------- architectures

def crossover_paf(a: ArchGenome, b: ArchGenome, cfg: OperatorConfig, rng: np.random.Generator) -> ArchGenome:
    total = a.n_layers + b.n_layers
    n = math.ceil(total / 2) if rng.random() > cfg.probs else total // 2
    n = min(max(n, 1), MAX_HIDDEN_LAYERS)
    pool = list(zip(a.dims + b.dims, a.funcs + b.funcs))
    picks = rng.integers(0, len(pool), size=n)
    return ArchGenome(tuple(pool[i][0] for i in picks), tuple(pool[i][1] for i in picks))


def _clamp_size(d: int) -> int:
    return min(max(int(d), 1), MAX_UNITS)


def perturb_arch(g: ArchGenome, cfg: OperatorConfig, rng: np.random.Generator) -> ArchGenome:
    lo, hi = cfg.arqval
    shifts = rng.integers(lo, hi + 1, size=g.n_layers)
    return replace(g, dims=tuple(_clamp_size(d + s) for d, s in zip(g.dims, shifts)))


def resize_layers(g: ArchGenome, n: int, rng: np.random.Generator) -> ArchGenome:
    """Truncate to the first ``n`` layers, or append random layers up to ``n``."""
    if n <= g.n_layers:
        return ArchGenome(g.dims[:n], g.funcs[:n])
    extra = n - g.n_layers
    dims = tuple(int(d) for d in rng.integers(1, MAX_UNITS + 1, size=extra))
    funcs = tuple(ACTIVATIONS[i] for i in rng.integers(0, len(ACTIVATIONS), size=extra))
    return ArchGenome(g.dims + dims, g.funcs + funcs)


# Layer count reached for p >= 0.6 and for 0.5 <= p < 0.6; below 0.5 sizes are perturbed.
_LAYER_MOVES = {1: (3, 2), 2: (3, 1), 3: (2, 1)}


def mutate_arch(g: ArchGenome, cfg: OperatorConfig, rng: np.random.Generator, p: float | None = None) -> ArchGenome:
    if p is None:
        p = rng.random()
    high, mid = _LAYER_MOVES[g.n_layers]
    if p >= 0.6:
        return resize_layers(g, high, rng)
    if p >= 0.5:
        return resize_layers(g, mid, rng)
    return perturb_arch(g, cfg, rng)


def mutate_paf(children: Sequence[ArchGenome], cfg: OperatorConfig, rng: np.random.Generator) -> list:
    return _mutate_selected(children, cfg, rng, mutate_arch)


def enforce_paf_uniqueness(lat: Lattice, cfg: OperatorConfig, rng: np.random.Generator,
                           rebuild: Callable[[Cell, ArchGenome], Cell] | None = None) -> Lattice:
    """Perturb architectures until no two cells share a structure.

    For each colliding pair the less fit cell (the later one in row-major
    order on ties) is perturbed, so the lattice's best cell is never touched.
    ``rebuild(cell, new_arch)`` produces the replacement cell; by default only
    the genome is swapped.
    """
    if rebuild is None:
        def rebuild(cell, arch):
            return replace(cell, genome=arch)

    cells = list(lat.cells)
    for _ in range(lat.dims.size):
        seen: dict[tuple, int] = {}
        changed = False
        for i, cell in enumerate(cells):
            key = cell.genome.structure()
            j = seen.get(key)
            if j is None:
                seen[key] = i
                continue
            victim = i if cells[i].fitness >= cells[j].fitness else j
            if victim == j:
                seen[key] = i
            cells[victim] = rebuild(cells[victim], perturb_arch(cells[victim].genome, cfg, rng))
            changed = True
        if not changed:
            break
    return lat.with_cells(cells)


# --------------------------------------------------------------------------- learning rules

def crossover_pra(a: RuleGenome, b: RuleGenome, rng: np.random.Generator) -> RuleGenome:
    if a.algorithm != b.algorithm:
        raise GenomeError(f"cannot cross {a.algorithm} with {b.algorithm}")
    params = []
    for x, y in zip(a.params, b.params):
        lo, hi = min(x, y), max(x, y)
        params.append(lo if lo == hi else float(rng.uniform(lo, hi)))
    return RuleGenome(a.algorithm, tuple(params))


def mutate_pra(g: RuleGenome, cfg: OperatorConfig, rng: np.random.Generator, signs=None) -> RuleGenome:
    """Each parameter moves by +-m% of its own value (fair coin), then is clamped."""
    if signs is None:
        signs = np.where(rng.random(len(g.params)) < 0.5, 1.0, -1.0)
    step = cfg.mutation_rate / 100.0
    params = []
    for value, sign, (lo, hi) in zip(g.params, signs, PARAM_RANGES[g.algorithm]):
        params.append(float(min(max(value * (1.0 + sign * step), lo), hi)))
    return RuleGenome(g.algorithm, tuple(params))
