"""Three-level nested cellular search.

The outer lattice holds learning-rule genomes; each of its cells owns a
lattice of architectures, and each architecture cell owns a lattice of
initial-weight genomes.  A weight cell's fitness is the training-set MSE (%)
after training from those initial weights; every upper cell's fitness is
the minimum over the lattice it owns.

One outer generation refines every rule cell (``gens.beafa`` generations of
its architecture lattice, each preceded by ``gens.bep`` generations on every
weight lattice) and then breeds the rule lattice itself.
"""

from __future__ import annotations

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import genome_ops as ops
from .genome_ops import ArchGenome, OperatorConfig, RuleGenome
from .lattice import (
    Cell,
    GridDims,
    Lattice,
    Neighborhood,
    UpdatePolicy,
    init_lattice,
    run_generation,
    stream,
)
from .network import (
    MAX_EPOCHS,
    WORST_FITNESS,
    DataSplit,
    TrainingDiverged,
    init_weights,
    mse,
    train,
)

log = logging.getLogger(__name__)

ALGORITHMS = ("BP", "SCG")
_UNIQUENESS_TAG = 7


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GenCounts:
    bera: int = 2
    beafa: int = 2
    bep: int = 2


@dataclass(frozen=True)
class SearchConfig:
    pra_pop: int = 4
    paf_pop: int = 9
    ppi_pop: int = 9
    gens: GenCounts = GenCounts()
    mode: str = "sync"
    async_policy: str = "uniform"
    neighborhood: str = "news4"
    operators: OperatorConfig = OperatorConfig()
    max_epochs: int = MAX_EPOCHS
    patience: int = 5
    seed: int = 0
    algorithms: tuple = ALGORITHMS
    trained_fitness: bool = True
    workers: int = 1

    def __post_init__(self):
        self.validate()

    @classmethod
    def paper_scale(cls, **overrides) -> "SearchConfig":
        base = dict(pra_pop=16, paf_pop=25, ppi_pop=25, gens=GenCounts(16, 5, 3))
        base.update(overrides)
        return cls(**base)

    def validate(self) -> None:
        for name in ("pra_pop", "paf_pop", "ppi_pop"):
            k = getattr(self, name)
            if k < 4 or math.isqrt(k) ** 2 != k:
                raise ConfigError(f"{name}={k} must be a perfect square >= 4")
        for name in ("bera", "beafa", "bep"):
            if getattr(self.gens, name) < 1:
                raise ConfigError(f"generation count {name} must be >= 1")
        if self.mode not in ("sync", "async"):
            raise ConfigError(f"mode must be 'sync' or 'async', got {self.mode!r}")
        if self.async_policy not in ("uniform", "sweep"):
            raise ConfigError(f"async_policy must be 'uniform' or 'sweep', got {self.async_policy!r}")
        try:
            Neighborhood(self.neighborhood)
        except ValueError:
            raise ConfigError(f"unknown neighborhood {self.neighborhood!r}") from None
        if not 0 <= self.max_epochs <= MAX_EPOCHS:
            raise ConfigError(f"max_epochs must lie in [0, {MAX_EPOCHS}]")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if not self.algorithms or any(a not in ALGORITHMS for a in self.algorithms):
            raise ConfigError(f"algorithms must be drawn from {ALGORITHMS}, got {self.algorithms!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def policy(self) -> UpdatePolicy:
        return UpdatePolicy.SYNC if self.mode == "sync" else UpdatePolicy(self.async_policy)

    @property
    def method(self) -> str:
        return "sync" if self.mode == "sync" else f"async-{self.async_policy}"


@dataclass
class AlgorithmResult:
    algorithm: str
    rule: RuleGenome
    arch: ArchGenome
    weights: tuple
    fitness: float
    train_mse: float
    val_mse: float
    test_mse: float
    trajectory: list
    trainings: int
    seconds: float
    lattice: Lattice = field(repr=False, default=None)

    def describe(self) -> dict:
        return {
            "layers": self.arch.n_layers,
            "sizes": list(self.arch.dims),
            "functions": [f.value for f in self.arch.funcs],
            "rule": self.rule.describe(),
        }


@dataclass
class SearchResult:
    config: SearchConfig
    results: dict

    def __getitem__(self, algorithm: str) -> AlgorithmResult:
        return self.results[algorithm]


def evaluate_ppi(weights, arch: ArchGenome, rule: RuleGenome, split: DataSplit,
                 max_epochs: int = MAX_EPOCHS, patience: int = 5, trained: bool = True):
    """Fitness of one initial-weight genome; returns ``(trained_weights, fitness)``."""
    net = arch.to_architecture(split.input_dim, split.output_dim)
    if not trained:
        return weights, mse(net, weights, split.train)
    try:
        best, _ = train(net, weights, split, rule.train_config(max_epochs, patience))
    except TrainingDiverged:
        return weights, WORST_FITNESS
    fitness = mse(net, best, split.train)
    return best, fitness if math.isfinite(fitness) else WORST_FITNESS


def evaluate_paf(cell: Cell) -> float:
    return cell.payload.best_fitness


def evaluate_pra(cell: Cell) -> float:
    return cell.payload.best_fitness


def nesting_consistent(pra: Lattice) -> bool:
    for pcell in pra.cells:
        if pcell.fitness != min(
            min(w.fitness for w in acell.payload.cells) for acell in pcell.payload.cells
        ):
            return False
        for acell in pcell.payload.cells:
            if acell.fitness != acell.payload.best_fitness:
                return False
    return True


def _child_key(level: int, seed: int, rng: np.random.Generator) -> tuple:
    return (seed, level, *(int(v) for v in rng.integers(0, 2**32, size=2)))


class _WeightOps:
    def __init__(self, search, arch, rule):
        self.search, self.arch, self.rule = search, arch, rule

    def crossover(self, a, b, rng):
        return ops.crossover_ppi(a, b, self.search.cfg.operators, rng)

    def mutate(self, genome, rng):
        return ops.mutate_weights(genome, self.search.cfg.operators, rng)

    def evaluate(self, genome, parents, rng):
        return self.search.weight_cell(genome, self.arch, self.rule)


class _ArchOps:
    def __init__(self, search, rule):
        self.search, self.rule = search, rule

    def crossover(self, a, b, rng):
        return ops.crossover_paf(a, b, self.search.cfg.operators, rng)

    def mutate(self, genome, rng):
        return ops.mutate_arch(genome, self.search.cfg.operators, rng)

    def evaluate(self, genome, parents, rng):
        for parent in parents:
            if parent.genome == genome:
                return parent
        return self.search.rebind_ppi(parents[0], genome, self.rule, rng)


class _RuleOps:
    def __init__(self, search):
        self.search = search

    def crossover(self, a, b, rng):
        return ops.crossover_pra(a, b, rng)

    def mutate(self, genome, rng):
        return ops.mutate_pra(genome, self.search.cfg.operators, rng)

    def evaluate(self, genome, parents, rng):
        base = min(parents, key=lambda c: c.fitness)
        if base.genome == genome:
            return base
        return self.search.retrain_rule_cell(base, genome, rng)


class NestedSearch:
    """Search state for one learning algorithm."""

    def __init__(self, cfg: SearchConfig, split: DataSplit, algorithm: str, executor=None):
        self.cfg, self.split, self.algorithm = cfg, split, algorithm
        self.alg_index = ALGORITHMS.index(algorithm)
        self.spec = Neighborhood(cfg.neighborhood)
        self.executor = executor
        self.trainings = 0
        self.trajectory: list[dict] = []
        self._lock = threading.Lock()

    # ----------------------------------------------------------- construction

    def weight_cell(self, weights, arch: ArchGenome, rule: RuleGenome) -> Cell:
        with self._lock:
            self.trainings += 1
        trained, fitness = evaluate_ppi(weights, arch, rule, self.split, self.cfg.max_epochs,
                                        self.cfg.patience, self.cfg.trained_fitness)
        return Cell(weights, fitness, trained)

    def weight_lattice(self, arch: ArchGenome, rule: RuleGenome, key) -> Lattice:
        net = arch.to_architecture(self.split.input_dim, self.split.output_dim)
        dims = GridDims.for_population(self.cfg.ppi_pop)
        return init_lattice(dims, lambda c, rng: self.weight_cell(init_weights(net, rng), arch, rule), key)

    def arch_cell(self, arch: ArchGenome, rule: RuleGenome, rng) -> Cell:
        ppi = self.weight_lattice(arch, rule, _child_key(3, self.cfg.seed, rng))
        return Cell(arch, ppi.best_fitness, ppi)

    def rule_cell(self, rule: RuleGenome, rng) -> Cell:
        dims = GridDims.for_population(self.cfg.paf_pop)
        paf = init_lattice(dims, lambda c, r: self.arch_cell(ops.random_arch(r), rule, r),
                           _child_key(2, self.cfg.seed, rng))
        return Cell(rule, paf.best_fitness, paf)

    def rebind_ppi(self, cell: Cell, arch: ArchGenome, rule: RuleGenome, rng) -> Cell:
        """Re-shape ``cell``'s weight lattice for ``arch``; no-op if unchanged."""
        if cell.genome == arch:
            return cell
        return self.arch_cell(arch, rule, rng)

    def retrain_rule_cell(self, base: Cell, rule: RuleGenome, rng) -> Cell:
        """Copy ``base``'s architectures and initial weights, retrain under ``rule``."""
        arch_cells = []
        for acell in base.payload.cells:
            ppi = acell.payload
            cells = [self.weight_cell(w.genome, acell.genome, rule) for w in ppi.cells]
            ppi = Lattice(ppi.dims, cells, 0, _child_key(3, self.cfg.seed, rng))
            arch_cells.append(Cell(acell.genome, ppi.best_fitness, ppi))
        paf = Lattice(base.payload.dims, arch_cells, 0, _child_key(2, self.cfg.seed, rng))
        return Cell(rule, paf.best_fitness, paf)

    # ----------------------------------------------------------- evolution

    def _record(self, level: str, lat: Lattice) -> None:
        event = {"algorithm": self.algorithm, "level": level, "key": list(lat.key),
                 "generation": lat.generation, "best": lat.best_fitness}
        self.trajectory.append(event)
        log.debug("%s %s gen %d best %.6g", self.algorithm, level, lat.generation, lat.best_fitness)

    def _generation(self, lat: Lattice, cellops, executor=None) -> Lattice:
        return run_generation(lat, cellops, self.spec, self.cfg.policy,
                              self.cfg.operators.mutation_rate, executor)

    def refine_arch_cell(self, cell: Cell, rule: RuleGenome) -> Cell:
        ppi = cell.payload
        if ppi.generation == 0:
            self._record("ppi", ppi)
        cellops = _WeightOps(self, cell.genome, rule)
        for _ in range(self.cfg.gens.bep):
            ppi = self._generation(ppi, cellops, self.executor)
            self._record("ppi", ppi)
        return Cell(cell.genome, ppi.best_fitness, ppi)

    def refine_rule_cell(self, cell: Cell) -> Cell:
        rule, paf = cell.genome, cell.payload
        if paf.generation == 0:
            self._record("paf", paf)
        cellops = _ArchOps(self, rule)
        for _ in range(self.cfg.gens.beafa):
            paf = paf.with_cells([self.refine_arch_cell(c, rule) for c in paf.cells])
            rng = stream(*paf.key, _UNIQUENESS_TAG, paf.generation)
            paf = ops.enforce_paf_uniqueness(
                paf, self.cfg.operators, rng,
                rebuild=lambda c, arch: self.rebind_ppi(c, arch, rule, rng))
            paf = self._generation(paf, cellops)
            self._record("paf", paf)
        return Cell(rule, paf.best_fitness, paf)

    def run(self) -> AlgorithmResult:
        start = time.perf_counter()
        dims = GridDims.for_population(self.cfg.pra_pop)
        key = (self.cfg.seed, 1, self.alg_index)
        pra = init_lattice(dims, lambda c, rng: self.rule_cell(ops.random_rule(self.algorithm, rng), rng), key)
        self._record("pra", pra)
        rule_ops = _RuleOps(self)
        for _ in range(self.cfg.gens.bera):
            pra = pra.with_cells([self.refine_rule_cell(c) for c in pra.cells])
            pra = self._generation(pra, rule_ops)
            self._record("pra", pra)
            log.info("%s outer generation %d: best training MSE %.4f%% (%d trainings)",
                     self.algorithm, pra.generation, pra.best_fitness, self.trainings)
        return self._extract(pra, time.perf_counter() - start)

    def _extract(self, pra: Lattice, seconds: float) -> AlgorithmResult:
        _, rcell = pra.best()
        _, acell = rcell.payload.best()
        _, wcell = acell.payload.best()
        net = acell.genome.to_architecture(self.split.input_dim, self.split.output_dim)
        weights = wcell.payload
        return AlgorithmResult(
            algorithm=self.algorithm,
            rule=rcell.genome,
            arch=acell.genome,
            weights=weights,
            fitness=wcell.fitness,
            train_mse=mse(net, weights, self.split.train),
            val_mse=mse(net, weights, self.split.validation),
            test_mse=mse(net, weights, self.split.test),
            trajectory=self.trajectory,
            trainings=self.trainings,
            seconds=seconds,
            lattice=pra,
        )


def run_search(cfg: SearchConfig, split: DataSplit) -> SearchResult:
    """Run the nested search once per configured learning algorithm."""
    cfg.validate()
    executor = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 and cfg.mode == "sync" else None
    try:
        results = {alg: NestedSearch(cfg, split, alg, executor).run() for alg in cfg.algorithms}
    finally:
        if executor is not None:
            executor.shutdown()
    return SearchResult(cfg, results)
