import math
from collections import defaultdict

import numpy as np
import pytest

from cgann import search as search_mod
from cgann.genome_ops import ArchGenome, RuleGenome
from cgann.lattice import Cell, GridDims, Lattice
from cgann.network import WORST_FITNESS, DataSplit, TrainingDiverged, init_weights, mse
from cgann.search import (
    ConfigError,
    GenCounts,
    NestedSearch,
    SearchConfig,
    evaluate_paf,
    evaluate_ppi,
    evaluate_pra,
    nesting_consistent,
    run_search,
)
from conftest import gaussian_split

SCG = RuleGenome("SCG", (5e-5, 5e-7))
BP = RuleGenome("BP", (0.2, 0.1))


def tiny(**kw):
    base = dict(pra_pop=4, paf_pop=4, ppi_pop=4, gens=GenCounts(1, 1, 1), max_epochs=8, seed=3)
    base.update(kw)
    return SearchConfig(**base)


def fitness_lattice(values):
    side = math.isqrt(len(values))
    return Lattice(GridDims(side), [Cell(None, v) for v in values])


@pytest.fixture(scope="module")
def tiny_result():
    split = gaussian_split(n=80, seed=1)
    return split, run_search(tiny(), split)


# ----------------------------------------------------------------- level fitness

def test_constant_target_is_learned():
    rng = np.random.default_rng(0)
    x = rng.uniform(size=(40, 3))
    t = np.tile([1.0, 0.0], (40, 1))
    split = DataSplit((x, t), (x, t), (x, t))
    arch = ArchGenome((2,), ("FL",))
    w0 = init_weights(arch.to_architecture(3, 2), rng)
    _, fitness = evaluate_ppi(w0, arch, SCG, split)
    assert fitness < 0.1


def test_zero_epoch_cap_is_untrained_mse(small_split):
    arch = ArchGenome((3, 2), ("FTH", "FLS"))
    net = arch.to_architecture(4, 2)
    w0 = init_weights(net, np.random.default_rng(1))
    w, fitness = evaluate_ppi(w0, arch, BP, small_split, max_epochs=0)
    assert fitness == mse(net, w0, small_split.train)
    assert evaluate_ppi(w0, arch, BP, small_split, trained=False)[1] == fitness


def test_evaluate_ppi_deterministic(small_split):
    arch = ArchGenome((5,), ("FTH",))
    w0 = init_weights(arch.to_architecture(4, 2), np.random.default_rng(2))
    a = evaluate_ppi(w0, arch, SCG, small_split)
    b = evaluate_ppi(w0, arch, SCG, small_split)
    assert a[1] == b[1] and all(np.array_equal(x, y) for x, y in zip(a[0], b[0]))


def test_divergence_gives_worst_fitness(small_split, monkeypatch):
    def boom(*args, **kw):
        raise TrainingDiverged("nan")

    monkeypatch.setattr(search_mod, "train", boom)
    arch = ArchGenome((5,), ("FTH",))
    w0 = init_weights(arch.to_architecture(4, 2), np.random.default_rng(2))
    assert evaluate_ppi(w0, arch, BP, small_split)[1] == WORST_FITNESS


def test_upper_levels_take_minimum():
    assert evaluate_paf(Cell(None, 0.0, fitness_lattice([3.0, 1.2, 7.7, 5.0]))) == 1.2
    assert evaluate_pra(Cell(None, 0.0, fitness_lattice([2.5] * 4))) == 2.5


# ----------------------------------------------------------------- plumbing

def test_rebind_ppi(small_split):
    s = NestedSearch(tiny(), small_split, "BP")
    rng = np.random.default_rng(0)
    a3 = ArchGenome((3,), ("FTH",))
    cell = s.arch_cell(a3, BP, rng)
    assert s.rebind_ppi(cell, a3, BP, rng) is cell
    a5 = ArchGenome((5,), ("FTH",))
    new = s.rebind_ppi(cell, a5, BP, rng)
    shapes = a5.to_architecture(4, 2).shapes
    for w in new.payload.cells:
        assert [m.shape for m in w.genome] == shapes
        assert all(np.all(np.abs(m) <= 0.05) for m in w.genome)
    assert new.fitness == new.payload.best_fitness


@pytest.mark.parametrize("mode", ["sync", "async"])
@pytest.mark.parametrize("bep", [1, 3])
def test_training_budget_per_weight_generation(small_split, mode, bep):
    # 3x3 lattice, NEWS4: every visit breeds 2 children, 9 visits per generation
    cfg = tiny(ppi_pop=9, gens=GenCounts(1, 1, bep), mode=mode)
    s = NestedSearch(cfg, small_split, "SCG")
    cell = s.arch_cell(ArchGenome((4,), ("FTH",)), SCG, np.random.default_rng(0))
    assert s.trainings == 9
    s.refine_arch_cell(cell, SCG)
    assert s.trainings == 9 + 18 * bep


def test_retrain_rule_cell_keeps_structure(small_split):
    s = NestedSearch(tiny(), small_split, "BP")
    base = s.rule_cell(BP, np.random.default_rng(0))
    other = RuleGenome("BP", (0.05, 0.05))
    moved = s.retrain_rule_cell(base, other, np.random.default_rng(1))
    assert [c.genome for c in moved.payload.cells] == [c.genome for c in base.payload.cells]
    for a, b in zip(moved.payload.cells, base.payload.cells):
        for wa, wb in zip(a.payload.cells, b.payload.cells):
            assert all(np.array_equal(x, y) for x, y in zip(wa.genome, wb.genome))
    assert moved.genome == other


# ----------------------------------------------------------------- full search

def test_result_per_algorithm(tiny_result):
    _, res = tiny_result
    assert set(res.results) == {"BP", "SCG"}
    for r in res.results.values():
        assert math.isfinite(r.test_mse)
        assert r.fitness == r.train_mse
        assert r.fitness == r.lattice.best_fitness
        assert r.describe()["layers"] == r.arch.n_layers


def test_nesting_consistent(tiny_result):
    _, res = tiny_result
    for r in res.results.values():
        assert nesting_consistent(r.lattice)
        for pcell in r.lattice.cells:
            assert evaluate_pra(pcell) == pcell.fitness
            for acell in pcell.payload.cells:
                assert evaluate_paf(acell) == acell.fitness


def test_architecture_bound(tiny_result):
    split, res = tiny_result
    for r in res.results.values():
        for pcell in r.lattice.cells:
            for acell in pcell.payload.cells:
                assert 1 <= acell.genome.n_layers <= 3
                assert all(1 <= d <= 12 for d in acell.genome.dims)
                shapes = acell.genome.to_architecture(split.input_dim, split.output_dim).shapes
                assert all([m.shape for m in w.genome] == shapes for w in acell.payload.cells)


def test_trajectories_monotone(tiny_result):
    _, res = tiny_result
    for r in res.results.values():
        per_key = defaultdict(dict)
        for ev in r.trajectory:
            book = per_key[(ev["level"], tuple(ev["key"]))]
            # a lattice shared by two cells evolves identically in both
            assert book.setdefault(ev["generation"], ev["best"]) == ev["best"]
        for book in per_key.values():
            bests = [book[g] for g in sorted(book)]
            assert all(b <= a for a, b in zip(bests, bests[1:]))
        outer = [ev["best"] for ev in r.trajectory if ev["level"] == "pra"]
        assert len(outer) == 2 and outer[1] <= outer[0]


def test_search_deterministic(tiny_result):
    split, res = tiny_result
    again = run_search(tiny(), split)
    for alg in res.results:
        a, b = res[alg], again[alg]
        assert (a.fitness, a.test_mse, a.rule, a.arch, a.trainings) == (b.fitness, b.test_mse, b.rule, b.arch, b.trainings)
        assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
        assert a.trajectory == b.trajectory


def test_threads_do_not_change_result(tiny_result):
    split, res = tiny_result
    threaded = run_search(tiny(workers=3, algorithms=("SCG",)), split)
    assert threaded["SCG"].trajectory == res["SCG"].trajectory
    assert threaded["SCG"].test_mse == res["SCG"].test_mse


def test_async_search_runs(small_split):
    res = run_search(tiny(mode="async", algorithms=("SCG",)), small_split)
    r = res["SCG"]
    assert res.config.method == "async-uniform"
    assert math.isfinite(r.test_mse) and nesting_consistent(r.lattice)


# ----------------------------------------------------------------- config

@pytest.mark.parametrize("kw", [
    dict(pra_pop=5), dict(paf_pop=1), dict(ppi_pop=8), dict(gens=GenCounts(0, 1, 1)),
    dict(mode="parallel"), dict(async_policy="random"), dict(neighborhood="hex"),
    dict(max_epochs=60), dict(patience=0), dict(algorithms=("LM",)), dict(workers=0),
])
def test_config_rejected(kw):
    with pytest.raises(ConfigError):
        SearchConfig(**kw)


def test_paper_scale_values():
    cfg = SearchConfig.paper_scale()
    assert (cfg.pra_pop, cfg.paf_pop, cfg.ppi_pop) == (16, 25, 25)
    assert cfg.gens == GenCounts(16, 5, 3)
    desk = SearchConfig()
    assert (desk.pra_pop, desk.paf_pop, desk.ppi_pop, desk.gens) == (4, 9, 9, GenCounts(2, 2, 2))
