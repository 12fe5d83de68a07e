"""Dataset descriptions, CSV loading, feature scaling and the synthetic generator."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str | None
    attributes: int
    classes: int
    examples: int | None = None
    labels: tuple | None = None


@dataclass(frozen=True)
class BaseSizes:
    """One row of the benchmark table: train / validation / test sizes."""

    name: str
    train: int
    validation: int
    test: int
    classes: int
    attributes: int

    @property
    def examples(self) -> int:
        return self.train + self.validation + self.test


BENCHMARKS = {
    b.name: b
    for b in [
        BaseSizes("german", 350, 150, 500, 2, 24),
        BaseSizes("ionosphere", 122, 53, 176, 2, 34),
        BaseSizes("vehicle", 296, 127, 423, 4, 18),
        BaseSizes("horse", 106, 45, 182, 3, 58),
        BaseSizes("cancer", 244, 105, 350, 2, 9),
        BaseSizes("diabetes", 269, 115, 384, 2, 8),
        BaseSizes("glass", 75, 32, 107, 6, 9),
        BaseSizes("heart", 322, 138, 460, 2, 35),
        BaseSizes("australian", 242, 103, 345, 2, 14),
        BaseSizes("sonar", 73, 31, 104, 2, 60),
    ]
}


def benchmark_spec(name: str, path: str | None = None) -> DatasetSpec:
    b = BENCHMARKS[name]
    return DatasetSpec(b.name, path, b.attributes, b.classes, b.examples)


@dataclass
class Dataset:
    name: str
    features: np.ndarray
    targets: np.ndarray
    labels: tuple

    def __len__(self) -> int:
        return len(self.features)

    @property
    def classes(self) -> np.ndarray:
        return self.targets.argmax(axis=1)


def _sort_labels(labels):
    try:
        return tuple(sorted(labels, key=float))
    except ValueError:
        return tuple(sorted(labels))


def load_dataset(spec: DatasetSpec) -> Dataset:
    """Read a header-less CSV whose last column is the class label."""
    if spec.path is None:
        raise DatasetError(f"dataset {spec.name!r} has no path")
    path = Path(spec.path)
    if not path.exists():
        raise DatasetError(f"{path}: no such file")
    rows, raw_labels = [], []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != spec.attributes + 1:
                raise DatasetError(
                    f"{path}:{lineno}: expected {spec.attributes + 1} columns, got {len(row)}")
            try:
                rows.append([float(v) for v in row[:-1]])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric attribute in {row[:-1]!r}") from None
            label = row[-1].strip()
            if spec.labels is not None and label not in spec.labels:
                raise DatasetError(f"{path}:{lineno}: unknown class label {label!r}")
            raw_labels.append(label)
    if spec.examples is not None and len(rows) != spec.examples:
        raise DatasetError(
            f"{path}: declared {spec.examples} examples but the file has {len(rows)}")
    labels = tuple(spec.labels) if spec.labels is not None else _sort_labels(set(raw_labels))
    if len(labels) != spec.classes:
        raise DatasetError(f"{path}: declared {spec.classes} classes but found {len(labels)}: {labels}")
    index = {lab: i for i, lab in enumerate(labels)}
    y = np.array([index[lab] for lab in raw_labels], dtype=int)
    return Dataset(spec.name, np.array(rows, dtype=float).reshape(-1, spec.attributes),
                   np.eye(len(labels))[y], labels)


def normalize(fit: np.ndarray, *others: np.ndarray) -> list[np.ndarray]:
    """Min-max scale using the fitting half's ranges; constant columns become 0.

    Values of the other halves outside the fitting range are not clamped.
    """
    if len(fit) == 0:
        raise DatasetError("cannot normalise with an empty fitting set")
    lo = fit.min(axis=0)
    span = fit.max(axis=0) - lo
    constant = span == 0
    scale = np.where(constant, 1.0, span)

    def apply(x):
        out = (x - lo) / scale
        out[:, constant] = 0.0
        return out

    return [apply(fit)] + [apply(x) for x in others]


def gaussian_mixture(n: int, classes: int = 2, features: int = 8, seed: int = 0,
                     separation: float = 1.5) -> tuple[np.ndarray, np.ndarray]:
    """Isotropic unit-variance clusters with centres drawn from N(0, separation^2)."""
    if n < classes:
        raise DatasetError("need at least one example per class")
    rng = np.random.default_rng(seed)
    centres = rng.normal(0.0, separation, size=(classes, features))
    y = np.arange(n) % classes
    rng.shuffle(y)
    x = centres[y] + rng.normal(size=(n, features))
    return x, y


def synthetic_dataset(n: int = 400, classes: int = 2, features: int = 8, seed: int = 0,
                      separation: float = 1.5) -> Dataset:
    x, y = gaussian_mixture(n, classes, features, seed, separation)
    return Dataset(f"synth{n}", x, np.eye(classes)[y], tuple(f"c{k}" for k in range(classes)))


def write_rows(fh, x: np.ndarray, y, label_prefix: str = "c") -> None:
    writer = csv.writer(fh, lineterminator="\n")
    for row, label in zip(x, y):
        writer.writerow([repr(float(v)) for v in row] + [f"{label_prefix}{int(label)}"])


def write_csv(path, x: np.ndarray, y, label_prefix: str = "c") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        write_rows(fh, x, y, label_prefix)
