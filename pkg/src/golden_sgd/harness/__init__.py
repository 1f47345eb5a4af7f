"""Grid search over (optimizer, eta, momentum, fraction, seed) and its reports."""

from .config import DEFAULT_ETAS, DEFAULT_FRACTIONS, DEFAULT_MOMENTA, PROPOSED, Cell, ExperimentConfig, iter_cells
from .reports import GridSummary, emit_reports, load_runs, render_heatmap, summarize, top_records
from .runner import (
    ConvergenceRow, RunRecord, convergence_report, mean_epoch_of_min, noise_eval, run_cell,
    run_grid, select_best_by_val_loss,
)

__all__ = [
    "Cell", "ConvergenceRow", "DEFAULT_ETAS", "DEFAULT_FRACTIONS", "DEFAULT_MOMENTA", "ExperimentConfig",
    "GridSummary", "PROPOSED", "RunRecord", "convergence_report", "emit_reports", "iter_cells",
    "load_runs", "mean_epoch_of_min", "noise_eval", "render_heatmap", "run_cell", "run_grid",
    "select_best_by_val_loss", "summarize", "top_records",
]
