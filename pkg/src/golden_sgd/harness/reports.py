"""Grid aggregation and on-disk outputs (runs.jsonl, grid.csv, heatmap.svg)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from html import escape
from pathlib import Path

import numpy as np

from ..errors import UndefinedTestError
from ..stats import top_k_mean, wilcoxon_signed_rank
from .config import PROPOSED, ExperimentConfig
from .runner import RunRecord

CSV_COLUMNS = ["optimizer", "eta", "momentum", "fraction", "seed", "min_val_loss",
               "epoch_of_min", "test_metric", "diverged"]


@dataclass
class GridSummary:
    optimizer: str
    fraction: float
    etas: list
    momenta: list
    cell_means: dict  # (eta, momentum) -> mean score over seeds
    top: list  # top-k cells, best first
    best: tuple
    top_mean: float
    top_std: float
    wilcoxon: dict = field(default_factory=dict)  # cell -> p-value of proposed vs cell

    def to_dict(self):
        return {
            "optimizer": self.optimizer,
            "fraction": self.fraction,
            "cells": [{"eta": e, "momentum": m, "mean_metric": v}
                      for (e, m), v in self.cell_means.items()],
            "top": [{"eta": e, "momentum": m} for e, m in self.top],
            "best": {"eta": self.best[0], "momentum": self.best[1]},
            "top_mean": self.top_mean,
            "top_std": self.top_std,
            "wilcoxon_vs_proposed": [{"eta": e, "momentum": m, "p": p}
                                     for (e, m), p in self.wilcoxon.items()],
        }


def _close(a, b):
    return math.isclose(a, b, rel_tol=0, abs_tol=1e-12)


def summarize(records, top_k=10, proposed=PROPOSED):
    """One GridSummary per (optimizer, fraction).

    Cells are ranked by mean score over seeds (diverged runs score 0); ties
    keep grid order. Wilcoxon p-values compare the proposed cell against each
    other top cell, paired by seed, when the proposed cell is in the grid.
    """
    groups = {}
    for r in records:
        groups.setdefault((r.optimizer, r.fraction_index), []).append(r)
    out = []
    for (opt, _), recs in groups.items():
        recs = sorted(recs, key=lambda r: (r.eta_index, r.momentum_index, r.seed))
        per_cell = {}
        for r in recs:
            per_cell.setdefault((r.eta_index, r.momentum_index), []).append(r)
        keys = sorted(per_cell)
        cells = [(per_cell[k][0].eta, per_cell[k][0].momentum) for k in keys]
        means = [float(np.mean([r.score for r in per_cell[k]])) for k in keys]
        k = min(top_k, len(cells))
        summ = top_k_mean(means, k)
        top = [cells[i] for i in summ.order]

        scores_by_cell = {c: {r.seed: r.score for r in per_cell[key]} for c, key in zip(cells, keys)}
        tests = {}
        prop = next((c for c in cells if _close(c[0], proposed[0]) and _close(c[1], proposed[1])), None)
        if prop is not None:
            for c in top:
                if c == prop:
                    continue
                seeds = sorted(set(scores_by_cell[prop]) & set(scores_by_cell[c]))
                try:
                    res = wilcoxon_signed_rank([scores_by_cell[prop][s] for s in seeds],
                                               [scores_by_cell[c][s] for s in seeds])
                    tests[c] = res.pvalue
                except UndefinedTestError:
                    tests[c] = None
        out.append(GridSummary(opt, recs[0].fraction,
                               sorted({c[0] for c in cells}), sorted({c[1] for c in cells}),
                               dict(zip(cells, means)), top, top[0], summ.mean, summ.std, tests))
    return out


def top_records(records, summaries):
    """All seed records of every top cell."""
    wanted = {(s.optimizer, s.fraction, c) for s in summaries for c in s.top}
    return [r for r in records if (r.optimizer, r.fraction, (r.eta, r.momentum)) in wanted]


# -- writers -----------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_jsonl(records, path):
    with open(path, "w", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def read_jsonl(path):
    with open(path) as fh:
        return [RunRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def write_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def write_timings(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_id", "wall_seconds"])
        for r in records:
            w.writerow([r.run_id, f"{r.wall_seconds:.3f}"])


# -- heatmap -----------------------------------------------------------------------

CELL_W, CELL_H = 64, 30
LOW_RGB, HIGH_RGB = (247, 251, 255), (8, 69, 148)


def _shade(v, lo, hi):
    t = 0.0 if hi <= lo else (v - lo) / (hi - lo)
    rgb = [round(a + t * (b - a)) for a, b in zip(LOW_RGB, HIGH_RGB)]
    return "#%02x%02x%02x" % tuple(rgb), t


def _panel(summary, x0, y0):
    parts = []
    values = list(summary.cell_means.values())
    lo, hi = min(values), max(values)
    left, top = x0 + 70, y0 + 40
    title = f"{summary.optimizer.upper()} - training fraction {summary.fraction:g}"
    parts.append(f'<text x="{x0 + 4}" y="{y0 + 18}" font-size="14" font-weight="bold">{escape(title)}</text>')
    parts.append(f'<text x="{x0 + 4}" y="{top - 6}" font-size="10">eta \\ momentum</text>')
    for j, m in enumerate(summary.momenta):
        parts.append(f'<text x="{left + j * CELL_W + CELL_W / 2}" y="{top - 6}" font-size="10" '
                     f'text-anchor="middle">{m:g}</text>')
    top_set = set(summary.top)
    for i, e in enumerate(summary.etas):
        y = top + i * CELL_H
        parts.append(f'<text x="{left - 6}" y="{y + CELL_H / 2 + 4}" font-size="10" '
                     f'text-anchor="end">{e:g}</text>')
        for j, m in enumerate(summary.momenta):
            x = left + j * CELL_W
            v = summary.cell_means.get((e, m))
            if v is None:
                continue
            fill, t = _shade(v, lo, hi)
            ink = "#ffffff" if t > 0.55 else "#000000"
            parts.append(f'<rect class="cell" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" '
                         f'fill="{fill}" stroke="#cccccc"/>')
            parts.append(f'<text x="{x + CELL_W / 2}" y="{y + CELL_H / 2 + 4}" font-size="10" '
                         f'text-anchor="middle" fill="{ink}">{v:.3f}</text>')
            if (e, m) in top_set:
                parts.append(f'<rect class="top10" x="{x + 1.5}" y="{y + 1.5}" width="{CELL_W - 3}" '
                             f'height="{CELL_H - 3}" fill="none" stroke="#1a9850" stroke-width="3"/>')
            if (e, m) == summary.best:
                parts.append(f'<rect class="best" x="{x + 4.5}" y="{y + 4.5}" width="{CELL_W - 9}" '
                             f'height="{CELL_H - 9}" fill="none" stroke="#d73027" stroke-width="3"/>')
    height = 40 + len(summary.etas) * CELL_H + 20
    width = 70 + len(summary.momenta) * CELL_W + 10
    return parts, width, height


def render_heatmap(summaries):
    """eta x momentum panels shaded linearly by mean metric.

    Top cells are outlined green, the best cell additionally red.
    """
    body, width, y = [], 0, 0
    for s in summaries:
        parts, w, h = _panel(s, 0, y)
        body.extend(parts)
        width, y = max(width, w), y + h
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{y}" '
            f'viewBox="0 0 {width} {y}" font-family="sans-serif">')
    return "\n".join([head, f'<rect width="{width}" height="{y}" fill="#ffffff"/>', *body, "</svg>"]) + "\n"


def emit_reports(records, summaries, out_dir, config=None):
    """Write runs.jsonl, grid.csv, heatmap.svg, summary.json and timings.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(records, out / "runs.jsonl")
    write_csv(records, out / "grid.csv")
    (out / "heatmap.svg").write_text(render_heatmap(summaries))
    (out / "summary.json").write_text(
        json.dumps([s.to_dict() for s in summaries], indent=2, sort_keys=True) + "\n")
    write_timings(records, out / "timings.csv")
    if config is not None:
        (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    return out


def load_runs(run_dir):
    """Records and config (if saved) from a grid output directory."""
    run_dir = Path(run_dir)
    records = read_jsonl(run_dir / "runs.jsonl")
    cfg_path = run_dir / "config.json"
    config = ExperimentConfig.from_json(cfg_path) if cfg_path.exists() else None
    return records, config
