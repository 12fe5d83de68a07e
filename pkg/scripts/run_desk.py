"""Desk-scale end-to-end run on the synthetic mixture.

400 examples, 8 features, 2 classes; one fold (train 140 / validation 60 /
test 200); pops 4/9/9, generations 2/2/2; both schedulers, both trainers.

    python scripts/run_desk.py [--seed 0] [--modes sync,async] [--workers 1] [-v]
"""

from __future__ import annotations

import argparse
import logging
import time

from cgann.harness import single_fold, synthetic_dataset
from cgann.search import SearchConfig, nesting_consistent


def monotone(trajectory) -> bool:
    books: dict = {}
    for ev in trajectory:
        books.setdefault((ev["level"], tuple(ev["key"])), {})[ev["generation"]] = ev["best"]
    for book in books.values():
        bests = [book[g] for g in sorted(book)]
        if any(b > a for a, b in zip(bests, bests[1:])):
            return False
    return True


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--data-seed", type=int, default=7)
    parser.add_argument("--modes", default="sync,async")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    ds = synthetic_dataset(400, 2, 8, seed=args.data_seed)
    total = time.perf_counter()
    for mode in args.modes.split(","):
        cfg = SearchConfig(mode=mode.strip(), seed=args.seed, workers=args.workers)
        res = single_fold(ds, cfg)
        for alg, r in res.results.items():
            print(f"{cfg.method:>13} {alg:>3}: test MSE {r.test_mse:7.3f}%  train {r.train_mse:7.3f}%  "
                  f"val {r.val_mse:7.3f}%  net {r.arch.describe():<16} {r.trainings:5d} trainings  "
                  f"{r.seconds:6.1f}s  monotone={monotone(r.trajectory)}  nested={nesting_consistent(r.lattice)}")
    print(f"total {time.perf_counter() - total:.1f}s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
