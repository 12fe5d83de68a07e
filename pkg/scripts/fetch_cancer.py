"""Build data/cancer.csv: the 699-example Wisconsin breast cancer base.

The UCI file is not redistributed here.  The same table ships as ``MASS::biopsy``
inside the ``pydataset`` source distribution, which pip can fetch from any
package index:

    python scripts/fetch_cancer.py                 # runs `pip download pydataset`
    python scripts/fetch_cancer.py --sdist pydataset-0.2.0.tar.gz

The 16 missing "bare nuclei" values are replaced by that column's median.
Output: 9 integer attributes, then the label (benign / malignant), no header.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import subprocess
import sys
import tarfile
import tempfile
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
MEMBER = "resources/rdata/csv/MASS/biopsy.csv"
SHA256 = "5aac73ad7e6cca70c04c9d5f61e09b3e35fb8d0021374470af2aeeae792988da"


def fetch_sdist(dest: Path) -> Path:
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "--no-binary", ":all:",
                    "pydataset==0.2.0", "-d", str(dest)], check=True)
    return next(dest.glob("pydataset-*.tar.gz"))


def read_biopsy(sdist: Path) -> list[list[str]]:
    with tarfile.open(sdist) as outer:
        inner_member = next(m for m in outer.getmembers() if m.name.endswith("resources.tar.gz"))
        inner_bytes = outer.extractfile(inner_member).read()
    with tarfile.open(fileobj=io.BytesIO(inner_bytes)) as inner:
        text = inner.extractfile(MEMBER).read().decode()
    rows = list(csv.reader(io.StringIO(text)))
    return rows[1:]


def convert(rows: list[list[str]]) -> list[list[str]]:
    attrs = [[None if v == "NA" else float(v) for v in r[2:11]] for r in rows]
    cols = np.array([[np.nan if v is None else v for v in a] for a in attrs])
    medians = np.nanmedian(cols, axis=0)
    out = []
    for a, r in zip(attrs, rows):
        filled = [medians[j] if v is None else v for j, v in enumerate(a)]
        out.append([str(int(v)) for v in filled] + [r[11]])
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sdist", type=Path, help="local pydataset-*.tar.gz")
    parser.add_argument("--output", type=Path, default=ROOT / "data" / "cancer.csv")
    args = parser.parse_args(argv)
    with tempfile.TemporaryDirectory() as tmp:
        sdist = args.sdist or fetch_sdist(Path(tmp))
        rows = convert(read_biopsy(sdist))
    args.output.parent.mkdir(parents=True, exist_ok=True)
    with args.output.open("w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    digest = hashlib.sha256(args.output.read_bytes()).hexdigest()
    print(f"wrote {len(rows)} rows to {args.output} (sha256 {digest})")
    if digest != SHA256:
        print(f"warning: checksum differs from the expected {SHA256}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
