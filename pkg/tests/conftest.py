import gzip
import importlib.util
from pathlib import Path

import numpy as np
import pytest

from golden_sgd.data import Dataset, stratified_split, write_idx_pair


def _mlxtend_csv():
    spec = importlib.util.find_spec("mlxtend")
    if spec is None or spec.origin is None:
        return None
    path = Path(spec.origin).parent / "data" / "data" / "mnist_5k.csv.gz"
    return path if path.exists() else None


@pytest.fixture(scope="session")
def mnist_dir(tmp_path_factory):
    """IDX directory built from the 5000-digit MNIST sample, or None."""
    csv = _mlxtend_csv()
    if csv is None:
        return None
    with gzip.open(csv, "rt") as fh:
        table = np.loadtxt(fh, delimiter=",")
    pool = Dataset(table[:, :-1].reshape(-1, 28, 28).astype(np.uint8),
                   table[:, -1].astype(np.int64), "train", "idx-file")
    parts = stratified_split(pool, {"test": 1000, "train": len(pool) - 1000}, seed=0)
    out = tmp_path_factory.mktemp("mnist")
    write_idx_pair(parts["train"], out, "train")
    write_idx_pair(parts["test"], out, "t10k")
    return str(out)


# acceptance results, filled by test_acceptance.py and printed after the run
CRITERIA = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        status, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {detail}")
