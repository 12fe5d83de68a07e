from .cv import F_CRITICAL, FTestResult, SplitPlan, f_test_5x2, split_5x2
from .data import (BENCHMARKS, Dataset, DatasetSpec, benchmark_spec, load_dataset, normalize,
                   synthetic_dataset)
from .experiment import run_5x2, single_fold
from .report import Record, RunReport, emit_report, read_records

__all__ = [
    "BENCHMARKS", "Dataset", "DatasetSpec", "F_CRITICAL", "FTestResult", "Record", "RunReport",
    "SplitPlan", "benchmark_spec", "emit_report", "f_test_5x2", "load_dataset", "normalize",
    "read_records", "run_5x2", "single_fold", "split_5x2", "synthetic_dataset",
]
