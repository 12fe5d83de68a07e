"""Toroidal cellular-automaton population and its generation schedulers.

Every cell holds a :class:`Cell` (genome, fitness, payload).  Fitness is
minimised.  Random streams are never shared between cells: each cell update
draws from a generator seeded by ``(lattice key, generation, event, row,
col)``, so a synchronous generation gives the same grid whatever order (or
thread) the cells are processed in.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Protocol, Sequence

import numpy as np

Coord = tuple[int, int]

# Entropy tags keeping the init / schedule / cell streams apart.
_INIT_TAG = 1
_SCHEDULE_TAG = 2
_CELL_TAG = 3


class LatticeError(RuntimeError):
    pass


class Neighborhood(str, enum.Enum):
    NEWS4 = "news4"
    MOORE8 = "moore8"
    # Linear-5 of the cGA literature: the radius-1 axial cross plus centre,
    # so geometrically the same neighbours as NEWS4.
    LINEAR5 = "linear5"


class UpdatePolicy(str, enum.Enum):
    SYNC = "sync"
    LINE_SWEEP = "sweep"
    UNIFORM_CHOICE = "uniform"


_AXIAL = [(-1, 0), (1, 0), (0, 1), (0, -1)]  # N, S, E, W
_DIAGONAL = [(-1, -1), (-1, 1), (1, -1), (1, 1)]  # NW, NE, SW, SE
_OFFSETS = {
    Neighborhood.NEWS4: _AXIAL,
    Neighborhood.LINEAR5: _AXIAL,
    Neighborhood.MOORE8: _AXIAL + _DIAGONAL,
}


@dataclass(frozen=True)
class GridDims:
    side: int

    def __post_init__(self):
        if self.side < 2:
            raise LatticeError(f"grid side must be >= 2, got {self.side}")

    @property
    def size(self) -> int:
        return self.side * self.side

    @classmethod
    def for_population(cls, k: int) -> "GridDims":
        side = math.isqrt(k)
        if side * side != k:
            raise LatticeError(f"population size {k} is not a perfect square")
        return cls(side)


def wrap(c: Coord, dims: GridDims) -> Coord:
    return (c[0] % dims.side, c[1] % dims.side)


def manhattan_distance(a: Coord, b: Coord, dims: GridDims | None = None) -> int:
    """Grid-walk distance; on a torus when ``dims`` is given."""
    total = 0
    for x, y in zip(a, b):
        d = abs(x - y)
        if dims is not None:
            d %= dims.side
            d = min(d, dims.side - d)
        total += d
    return total


def neighbors(c: Coord, spec: Neighborhood, dims: GridDims) -> list[Coord]:
    """Wrapped neighbour coordinates in N, S, E, W (then NW, NE, SW, SE) order.

    On a 2x2 grid opposite offsets wrap onto the same cell, so coordinates
    repeat there.
    """
    r, c0 = c
    return [wrap((r + dr, c0 + dc), dims) for dr, dc in _OFFSETS[Neighborhood(spec)]]


@dataclass(frozen=True)
class Cell:
    genome: Any
    fitness: float
    payload: Any = None


@dataclass
class Lattice:
    dims: GridDims
    cells: list
    generation: int = 0
    key: tuple = (0,)

    def __post_init__(self):
        if len(self.cells) != self.dims.size:
            raise LatticeError(f"expected {self.dims.size} cells, got {len(self.cells)}")

    @property
    def side(self) -> int:
        return self.dims.side

    def __getitem__(self, c: Coord) -> Cell:
        r, col = wrap(c, self.dims)
        return self.cells[r * self.side + col]

    def coords(self) -> list[Coord]:
        return [(r, c) for r in range(self.side) for c in range(self.side)]

    def fitness_grid(self) -> np.ndarray:
        return np.array([cell.fitness for cell in self.cells]).reshape(self.side, self.side)

    def best(self) -> tuple[Coord, Cell]:
        i = min(range(len(self.cells)), key=lambda j: self.cells[j].fitness)
        return divmod(i, self.side), self.cells[i]

    @property
    def best_fitness(self) -> float:
        return min(cell.fitness for cell in self.cells)

    def with_cells(self, cells, advance: bool = False) -> "Lattice":
        return replace(self, cells=list(cells), generation=self.generation + int(advance))


def stream(*words: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(w) for w in words]))


def init_lattice(dims: GridDims, make_cell: Callable[[Coord, np.random.Generator], Cell],
                 key: Sequence[int] = (0,)) -> Lattice:
    key = tuple(int(k) for k in key)
    cells = [make_cell((r, c), stream(*key, _INIT_TAG, r, c))
             for r in range(dims.side) for c in range(dims.side)]
    return Lattice(dims, cells, 0, key)


class CellOps(Protocol):
    """Per-cell breeding pipeline used by the schedulers."""

    def crossover(self, a: Any, b: Any, rng: np.random.Generator) -> Any: ...

    def mutate(self, genome: Any, rng: np.random.Generator) -> Any: ...

    def evaluate(self, genome: Any, parents: tuple[Cell, Cell], rng: np.random.Generator) -> Cell: ...


def replacer(incumbent: Cell, candidates: Sequence[Cell]) -> Cell:
    """Elitist replacement: the best candidate wins only if strictly fitter."""
    if not candidates:
        return incumbent
    best = min(candidates, key=lambda cell: cell.fitness)
    return best if best.fitness < incumbent.fitness else incumbent


def mutation_count(n: int, rate_percent: float) -> int:
    """round((m/100) * n), halves rounded up."""
    return max(0, math.floor(rate_percent / 100.0 * n + 0.5))


def choose_mutants(n: int, rate_percent: float, rng: np.random.Generator) -> set[int]:
    k = mutation_count(n, rate_percent)
    return set(rng.choice(n, size=k, replace=False).tolist()) if k else set()


def pair_parents(parents: Sequence[Cell]) -> list[tuple[Cell, Cell]]:
    half = len(parents) // 2
    return [(parents[i], parents[i + half]) for i in range(half)]


def update_cell(lat: Lattice, coord: Coord, ops: CellOps, spec: Neighborhood,
                rng: np.random.Generator, mutate_slots: Sequence[bool]) -> Cell:
    """Selection, crossover, mutation, evaluation and replacement for one cell."""
    pairs = pair_parents([lat[c] for c in neighbors(coord, spec, lat.dims)])
    candidates = []
    try:
        for (a, b), mutate in zip(pairs, mutate_slots):
            child = ops.crossover(a.genome, b.genome, rng)
            if mutate:
                child = ops.mutate(child, rng)
            candidates.append(ops.evaluate(child, (a, b), rng))
    except LatticeError:
        raise
    except Exception as exc:
        raise LatticeError(f"evaluation failed at cell {coord}: {exc}") from exc
    return replacer(lat[coord], candidates)


def _children_per_event(spec: Neighborhood) -> int:
    return len(_OFFSETS[Neighborhood(spec)]) // 2


@dataclass
class GenerationPlan:
    """Visit sequence and mutation slots of one generation."""

    visits: list
    mutants: set = field(default_factory=set)
    width: int = 2

    def slots(self, event: int) -> list[bool]:
        return [event * self.width + j in self.mutants for j in range(self.width)]


def plan_generation(lat: Lattice, spec: Neighborhood, policy: UpdatePolicy,
                    mutation_rate: float) -> GenerationPlan:
    """Draw the visit order and which offspring (across the whole generation)
    are mutated, so that exactly round(m/100 * offspring) children mutate."""
    rng = stream(*lat.key, _SCHEDULE_TAG, lat.generation)
    policy = UpdatePolicy(policy)
    coords = lat.coords()
    if policy is UpdatePolicy.UNIFORM_CHOICE:
        picks = rng.integers(0, len(coords), size=len(coords))
        visits = [coords[i] for i in picks]
    else:
        visits = coords
    width = _children_per_event(spec)
    mutants = choose_mutants(len(visits) * width, mutation_rate, rng)
    return GenerationPlan(visits, mutants, width)


def _cell_stream(lat: Lattice, event: int, coord: Coord) -> np.random.Generator:
    return stream(*lat.key, _CELL_TAG, lat.generation, event, *coord)


def synchronous_generation(lat: Lattice, ops: CellOps, spec: Neighborhood = Neighborhood.NEWS4,
                           mutation_rate: float = 10.0, executor=None) -> Lattice:
    """Every cell breeds from the frozen source grid; results go to a shadow grid.

    ``executor`` (anything with a ``map`` method) may run the cell updates
    concurrently; the result does not depend on it.
    """
    plan = plan_generation(lat, spec, UpdatePolicy.SYNC, mutation_rate)

    def work(item):
        event, coord = item
        return update_cell(lat, coord, ops, spec, _cell_stream(lat, 0, coord), plan.slots(event))

    mapper = executor.map if executor is not None else map
    shadow = list(mapper(work, enumerate(plan.visits)))
    return lat.with_cells(shadow, advance=True)


def asynchronous_generation(lat: Lattice, ops: CellOps, spec: Neighborhood = Neighborhood.NEWS4,
                            policy: UpdatePolicy = UpdatePolicy.UNIFORM_CHOICE,
                            mutation_rate: float = 10.0, on_visit=None) -> Lattice:
    """Cells are updated one at a time, in place, and later visits see earlier updates."""
    plan = plan_generation(lat, spec, policy, mutation_rate)
    work = lat.with_cells(lat.cells)
    for event, coord in enumerate(plan.visits):
        if on_visit is not None:
            on_visit(event, coord)
        cell = update_cell(work, coord, ops, spec, _cell_stream(lat, event + 1, coord), plan.slots(event))
        work.cells[coord[0] * lat.side + coord[1]] = cell
    work.generation = lat.generation + 1
    return work


def run_generation(lat: Lattice, ops: CellOps, spec: Neighborhood, policy: UpdatePolicy,
                   mutation_rate: float = 10.0, executor=None) -> Lattice:
    if UpdatePolicy(policy) is UpdatePolicy.SYNC:
        return synchronous_generation(lat, ops, spec, mutation_rate, executor)
    return asynchronous_generation(lat, ops, spec, policy, mutation_rate)
