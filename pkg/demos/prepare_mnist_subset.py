"""Turn the 5000-digit MNIST sample shipped with mlxtend into IDX files.

    python3 demos/prepare_mnist_subset.py ~/mnist-idx
    export GOLDEN_SGD_DATA=~/mnist-idx

Writes train-* (4000 images) and t10k-* (1000 images), both stratified.
Any full MNIST download in IDX form can be used instead.
"""

import gzip
import sys
from pathlib import Path

import numpy as np

from golden_sgd.data import Dataset, stratified_split, write_idx_pair


def mlxtend_csv():
    import mlxtend

    return Path(mlxtend.__file__).parent / "data" / "data" / "mnist_5k.csv.gz"


def prepare(out_dir, n_test=1000, seed=0, csv_path=None):
    with gzip.open(csv_path or mlxtend_csv(), "rt") as fh:
        table = np.loadtxt(fh, delimiter=",")
    images = table[:, :-1].reshape(-1, 28, 28).astype(np.uint8)
    labels = table[:, -1].astype(np.int64)
    pool = Dataset(images, labels, "train", "idx-file")
    parts = stratified_split(pool, {"test": n_test, "train": len(pool) - n_test}, seed)
    write_idx_pair(parts["train"], out_dir, "train")
    write_idx_pair(parts["test"], out_dir, "t10k")
    return out_dir


if __name__ == "__main__":
    out = prepare(sys.argv[1] if len(sys.argv) > 1 else "mnist-idx")
    print(f"IDX files written to {out}")
