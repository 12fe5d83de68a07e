"""Run records, the summary table and the pairwise F-test table.

Output directory layout::

    records.jsonl   one JSON object per (dataset, algorithm, method, replication, fold)
    summary.txt     mean / sample std of the test MSE (%) per dataset and column
    ftest.txt       pairwise 5x2cv F-test marks ('>' iff F > 4.74), when >= 2 methods
    run.json        config snapshot, master seed, wall-clock seconds
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cv import F_CRITICAL, f_test_5x2


class ReportError(RuntimeError):
    pass


@dataclass
class Record:
    dataset: str
    algorithm: str
    method: str
    replication: int
    fold: int
    test_mse: float
    train_mse: float
    val_mse: float
    fitness: float
    network: dict
    seed: int

    @classmethod
    def from_dict(cls, d: dict) -> "Record":
        return cls(**d)


@dataclass
class RunReport:
    config: dict
    records: list = field(default_factory=list)
    wall_clock: float = 0.0
    seed: int = 0

    def columns(self) -> list[tuple[str, str]]:
        return sorted({(r.method, r.algorithm) for r in self.records})

    def datasets(self) -> list[str]:
        return sorted({r.dataset for r in self.records})

    def errors(self, dataset: str, method: str, algorithm: str) -> list[float]:
        rows = [r for r in self.records
                if (r.dataset, r.method, r.algorithm) == (dataset, method, algorithm)]
        rows.sort(key=lambda r: (r.replication, r.fold))
        return [r.test_mse for r in rows]


def summary_rows(report: RunReport) -> list[dict]:
    rows = []
    for ds in report.datasets():
        for method, alg in report.columns():
            errs = report.errors(ds, method, alg)
            if errs:
                rows.append({
                    "dataset": ds, "method": method, "algorithm": alg, "n": len(errs),
                    "mean": float(np.mean(errs)),
                    "std": float(np.std(errs, ddof=1)) if len(errs) > 1 else 0.0,
                })
    return rows


def format_summary(report: RunReport) -> str:
    cols = report.columns()
    stats = {(r["dataset"], r["method"], r["algorithm"]): r for r in summary_rows(report)}
    header = ["dataset", "stat"] + [f"{m}/{a}" for m, a in cols]
    lines = ["TEST MSE (%) PER BASE", "\t".join(header)]
    for ds in report.datasets():
        for stat in ("mean", "std"):
            cells = [f"{stats[(ds, m, a)][stat]:.4f}" if (ds, m, a) in stats else "" for m, a in cols]
            lines.append("\t".join([ds, stat] + cells))
    return "\n".join(lines) + "\n"


def ftest_marks(report: RunReport) -> list[dict]:
    """Pairwise F-tests between methods sharing an algorithm and a complete 10-error vector."""
    out = []
    methods = sorted({r.method for r in report.records})
    algorithms = sorted({r.algorithm for r in report.records})
    for ds in report.datasets():
        for alg in algorithms:
            for m_a, m_b in itertools.combinations(methods, 2):
                ea, eb = report.errors(ds, m_a, alg), report.errors(ds, m_b, alg)
                if len(ea) != 10 or len(eb) != 10:
                    continue
                res = f_test_5x2(ea, eb)
                out.append({"dataset": ds, "algorithm": alg, "a": m_a, "b": m_b,
                            "F": res.statistic, "mark": ">" if res.reject else "<"})
    return out


def format_ftest(marks: list[dict]) -> str:
    lines = [f"5x2cv F-test ('>' means F > {F_CRITICAL})", "dataset\talgorithm\tpair\tF\tmark"]
    for m in marks:
        lines.append(f"{m['dataset']}\t{m['algorithm']}\t{m['a']} vs {m['b']}\t{m['F']:.4f}\t{m['mark']}")
    return "\n".join(lines) + "\n"


def emit_report(report: RunReport, outdir, ftest: bool = True) -> dict:
    if not report.records:
        raise ReportError("no completed runs to report")
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {"records": outdir / "records.jsonl", "summary": outdir / "summary.txt",
                 "run": outdir / "run.json"}
        with paths["records"].open("w") as fh:
            for rec in report.records:
                fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")
        paths["summary"].write_text(format_summary(report))
        paths["run"].write_text(json.dumps(
            {"config": report.config, "seed": report.seed, "wall_clock": report.wall_clock},
            indent=2, sort_keys=True))
        marks = ftest_marks(report) if ftest else []
        if marks:
            paths["ftest"] = outdir / "ftest.txt"
            paths["ftest"].write_text(format_ftest(marks))
    except OSError as exc:
        raise ReportError(f"cannot write report to {outdir}: {exc}") from exc
    return paths


def read_records(path) -> list[Record]:
    with Path(path).open() as fh:
        return [Record.from_dict(json.loads(line)) for line in fh if line.strip()]


def read_report(outdir) -> RunReport:
    outdir = Path(outdir)
    meta = json.loads((outdir / "run.json").read_text())
    return RunReport(meta["config"], read_records(outdir / "records.jsonl"),
                     meta["wall_clock"], meta["seed"])
