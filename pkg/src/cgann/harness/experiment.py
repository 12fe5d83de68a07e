"""5x2cv driver: one nested search per (replication, fold, method)."""

from __future__ import annotations

import logging
import time

import numpy as np

from ..network import DataSplit
from ..search import SearchConfig, SearchResult, run_search
from .config import RunConfig
from .cv import Fold, split_5x2
from .data import Dataset, load_dataset, normalize
from .report import Record, RunReport

log = logging.getLogger(__name__)


def fold_seed(seed: int, replication: int, fold: int) -> int:
    return int(np.random.SeedSequence([int(seed), replication, fold]).generate_state(1)[0])


def make_split(ds: Dataset, fold: Fold, scale: bool = True) -> DataSplit:
    x, t = ds.features, ds.targets
    xtr, xva, xte = x[fold.train], x[fold.validation], x[fold.test]
    if scale:
        fit = np.vstack([xtr, xva])
        _, xtr, xva, xte = normalize(fit, xtr, xva, xte)
    return DataSplit((xtr, t[fold.train]), (xva, t[fold.validation]), (xte, t[fold.test]))


def single_fold(ds: Dataset, cfg: SearchConfig, replication: int = 0, fold: int = 0,
                scale: bool = True) -> SearchResult:
    """One search on one fold of the 5x2 plan drawn from ``cfg.seed``."""
    plan = split_5x2(ds, cfg.seed, replication + 1)
    return run_search(cfg, make_split(ds, plan.fold(replication, fold), scale))


def run_5x2(cfg: RunConfig, dataset: Dataset | None = None, progress=None) -> RunReport:
    start = time.perf_counter()
    ds = dataset if dataset is not None else load_dataset(cfg.dataset)
    seed = cfg.search.seed
    plan = split_5x2(ds, seed, cfg.replications)
    report = RunReport(config=cfg.snapshot(), seed=seed)
    for fold in plan.folds:
        split = make_split(ds, fold, cfg.scale_features)
        fseed = fold_seed(seed, fold.replication, fold.fold)
        for mode in cfg.modes:
            search_cfg = cfg.search_for(mode, fseed)
            result = run_search(search_cfg, split)
            for alg, res in result.results.items():
                rec = Record(
                    dataset=ds.name, algorithm=alg, method=search_cfg.method,
                    replication=fold.replication, fold=fold.fold,
                    test_mse=res.test_mse, train_mse=res.train_mse, val_mse=res.val_mse,
                    fitness=res.fitness, network=res.describe(), seed=fseed,
                )
                report.records.append(rec)
                log.info("%s rep %d fold %d %s/%s: test MSE %.4f%%", ds.name, fold.replication,
                         fold.fold, rec.method, alg, rec.test_mse)
                if progress is not None:
                    progress(rec)
    report.wall_clock = time.perf_counter() - start
    return report
