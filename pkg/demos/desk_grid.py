"""Desk-scale version of the eta x momentum grid, start to finish.

    python3 demos/prepare_mnist_subset.py mnist-idx
    GOLDEN_SGD_DATA=mnist-idx python3 demos/desk_grid.py runs/desk

Trains SGD and Adam on a 3 x 2 grid with three seeds (36 runs of 10 epochs
on 2000 digits; about 15 minutes on one core), then prints the report, the
noise table and writes heatmap.svg next to runs.jsonl.
"""

import sys

from golden_sgd.harness.cli import main
from golden_sgd.harness.config import ExperimentConfig
from golden_sgd.harness.reports import emit_reports
from golden_sgd.harness.runner import default_workers, run_grid

out = sys.argv[1] if len(sys.argv) > 1 else "runs/desk"
config = ExperimentConfig(optimizer=["sgd", "adam"], eta_list=[0.0001, 0.016, 0.2],
                          momentum_list=[0.0, 0.874], fractions=[1.0], seeds=[0, 1, 2])
records, summaries = run_grid(config, workers=default_workers(), out_dir=out, keep_params=False)
emit_reports(records, summaries, out, config)

main(["report", "--runs", out])
print()
main(["noise-eval", "--runs", out, "--levels", "0,5,10"])
