"""Command line: ``cgann {run,ftest,gen-synth,validate}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..search import ConfigError
from .config import load_config
from .cv import SplitError, f_test_5x2, split_5x2, train_size
from .data import DatasetError, gaussian_mixture, load_dataset, write_csv, write_rows
from .experiment import run_5x2
from .report import ReportError, emit_report


def _read_errors(path: str) -> np.ndarray:
    try:
        values = np.array(Path(path).read_text().replace(",", " ").split(), dtype=float)
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot read error vector from {path}: {exc}") from None
    if values.size != 10:
        raise DatasetError(f"{path}: expected 10 error values, found {values.size}")
    return values


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    outdir = args.output or cfg.output_dir
    report = run_5x2(cfg, progress=lambda r: print(
        f"rep {r.replication} fold {r.fold} {r.method}/{r.algorithm}: test MSE {r.test_mse:.4f}%",
        flush=True))
    paths = emit_report(report, outdir)
    print(Path(paths["summary"]).read_text(), end="")
    print(f"report written to {outdir}")
    return 0


def cmd_ftest(args) -> int:
    res = f_test_5x2(_read_errors(args.a), _read_errors(args.b))
    if args.json:
        print(json.dumps({
            "F": None if res.degenerate else res.statistic,
            "numerator": res.numerator, "denominator": res.denominator,
            "degenerate": res.degenerate, "reject": res.reject,
            "differences": res.differences.tolist(), "variances": res.variances.tolist(),
        }))
    else:
        print(res.summary())
    return 0


def cmd_gen_synth(args) -> int:
    x, y = gaussian_mixture(args.n, args.classes, args.features, args.seed, args.separation)
    if args.output:
        write_csv(args.output, x, y)
    else:
        write_rows(sys.stdout, x, y)
    return 0


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    ds = load_dataset(cfg.dataset)
    plan = split_5x2(ds, cfg.search.seed, cfg.replications)
    f = plan.fold(0, 0)
    print(f"config ok: {args.config}")
    print(f"dataset {ds.name}: {len(ds)} examples, {ds.features.shape[1]} attributes, "
          f"{len(ds.labels)} classes {list(ds.labels)}")
    print(f"first fold sizes: train {len(f.train)} validation {len(f.validation)} test {len(f.test)} "
          f"(expected train {train_size(len(f.train) + len(f.validation))})")
    s = cfg.search
    print(f"search: pops {s.pra_pop}/{s.paf_pop}/{s.ppi_pop}, gens {s.gens.bera}/{s.gens.beafa}/{s.gens.bep}, "
          f"modes {','.join(cfg.modes)}, algorithms {','.join(s.algorithms)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgann", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log search progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full 5x2cv search and report")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="report directory (overrides output_dir)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ftest", help="combined 5x2cv F-test on two files of 10 errors")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_ftest)

    p = sub.add_parser("gen-synth", help="seeded Gaussian-mixture classification CSV")
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--separation", type=float, default=1.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", help="CSV path (stdout if omitted)")
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("validate", help="check a config and its dataset")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DatasetError, SplitError, ReportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
