"""XOR reference run for the trainer thresholds used in the tests.

Trains a 2-4-1 network (tanh hidden layer, linear output) on the four XOR
patterns for at most 50 epochs, from ten seeded starts, and counts the runs
ending below 5% training MSE.  Early stopping is effectively off (patience
50, validation = training set).

    python scripts/xor_reference.py [--init 1.0] [--seeds 10]
"""

from __future__ import annotations

import argparse

import numpy as np

from cgann.network import Activation, Architecture, DataSplit, TrainConfig, mse, train

X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], float)
T = np.array([[0], [1], [1], [0]], float)


def run(algorithm: str, init: float, seeds: int) -> list[float]:
    part = (X, T)
    split = DataSplit(part, part, part)
    arch = Architecture(2, 1, ((4, Activation.FTH),))
    cfg = TrainConfig(algorithm, bp_rate=0.25, bp_momentum=0.25, max_epochs=50, patience=50)
    out = []
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        w0 = tuple(rng.uniform(-init, init, size=s) for s in arch.shapes)
        w, _ = train(arch, w0, split, cfg)
        out.append(mse(arch, w, part))
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="XOR trainer reference run")
    parser.add_argument("--init", type=float, default=1.0, help="initial weights ~ U[-init, init]")
    parser.add_argument("--seeds", type=int, default=10)
    args = parser.parse_args(argv)
    for alg in ("BP", "SCG"):
        errs = run(alg, args.init, args.seeds)
        wins = sum(e < 5.0 for e in errs)
        print(f"{alg:>3}: {wins}/{args.seeds} below 5%   final MSE% {np.round(errs, 2).tolist()}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
