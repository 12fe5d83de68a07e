import numpy as np
import pytest

from cgann.lattice import Cell, GridDims, Lattice
from cgann.network import DataSplit


class ScalarOps:
    """Toy breeding pipeline on float genomes; fitness is |genome|."""

    def __init__(self):
        self.mutations = 0

    def crossover(self, a, b, rng):
        return 0.5 * (a + b) + rng.normal(0.0, 0.5)

    def mutate(self, genome, rng):
        self.mutations += 1
        return genome + rng.normal()

    def evaluate(self, genome, parents, rng):
        return Cell(genome, abs(genome))


def scalar_lattice(side, seed=0, key=(0,)):
    rng = np.random.default_rng(seed)
    values = rng.normal(0.0, 3.0, size=side * side)
    return Lattice(GridDims(side), [Cell(float(v), abs(float(v))) for v in values], 0, key)


@pytest.fixture
def scalar_ops():
    return ScalarOps()


def gaussian_split(n=120, features=4, seed=0, separation=2.0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    centres = rng.normal(0.0, separation, size=(2, features))
    x = centres[y] + rng.normal(size=(n, features))
    x = (x - x.min(0)) / (x.max(0) - x.min(0))
    t = np.eye(2)[y]
    a, b = int(0.5 * n), int(0.7 * n)
    return DataSplit((x[:a], t[:a]), (x[a:b], t[a:b]), (x[b:], t[b:]))


@pytest.fixture
def small_split():
    return gaussian_split()


# ----------------------------------------------------------------- acceptance lines

def pytest_configure(config):
    config._criteria = []
    config.addinivalue_line("markers", "acceptance: one numbered acceptance criterion")


@pytest.fixture
def criterion(request):
    """``criterion(n, ok, detail)`` records and prints one PASS/FAIL line (SKIP if ok is None)."""
    seen = []

    def report(number, ok, detail):
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"{status} criterion {number}: {detail}"
        seen.append(line)
        request.config._criteria.append(line)
        print(line)
        return ok

    yield report
    if not seen:
        request.config._criteria.append(f"FAIL {request.node.name}: raised before reporting")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if config._criteria:
        terminalreporter.section("acceptance criteria")
        for line in config._criteria:
            terminalreporter.write_line(line)
