"""Training runs, grid execution and record selection."""

from __future__ import annotations

import functools
import logging
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import optim
from ..data import desk_splits, normalize_to_pm1, subsample
from ..errors import InsufficientDataError, NoCandidateError, NonFiniteGradientError
from ..micrograd import Rng, build_mnist_cnn, load_checkpoint, save_checkpoint, softmax_cross_entropy
from ..noise import NoiseSpec, apply_noise
from .config import Cell, ExperimentConfig, iter_cells

log = logging.getLogger(__name__)

EVAL_BATCH = 500


@dataclass
class RunRecord:
    optimizer: str
    eta: float
    momentum: float
    fraction: float
    seed: int
    eta_index: int
    momentum_index: int
    fraction_index: int
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    min_val_loss: float | None = None
    epoch_of_min: int | None = None  # 1-based
    test_metric: float | None = None  # accuracy at the min-val-loss checkpoint
    diverged: bool = False
    last_finite_epoch: int = 0
    error: str | None = None
    checkpoint: str | None = None
    wall_seconds: float = field(default=0.0, compare=False)
    params: dict | None = field(default=None, repr=False, compare=False)

    # wall-clock time and in-memory weights are not part of the serialized record
    _transient = ("wall_seconds", "params")

    @property
    def cell(self):
        return Cell(self.optimizer, self.eta, self.momentum, self.fraction,
                    self.eta_index, self.momentum_index, self.fraction_index)

    @property
    def run_id(self):
        return (f"{self.optimizer}-f{self.fraction_index}-e{self.eta_index}"
                f"-m{self.momentum_index}-s{self.seed}")

    @property
    def score(self):
        """Ranking metric: test accuracy, or 0 for diverged/failed runs."""
        if self.diverged or self.test_metric is None:
            return 0.0
        return self.test_metric

    def to_dict(self):
        doc = asdict(self)
        for key in self._transient:
            doc.pop(key)
        return doc

    @classmethod
    def from_dict(cls, doc):
        return cls(**doc)


@functools.lru_cache(maxsize=4)
def _splits(data_key):
    source, data_dir, n_train, n_val, n_test, seed = data_key
    return desk_splits(n_train, n_val, n_test, seed=seed, data_dir=data_dir, source=source)


def load_splits(config):
    return _splits(config.data_key())


def run_rng(config, cell, seed):
    """Per-run stream, keyed so new cells never disturb existing ones."""
    return Rng(config.master_seed).child(cell.eta_index, cell.momentum_index, cell.fraction_index, seed)


def evaluate(model, x, y):
    """Sample-mean loss and accuracy in evaluation mode."""
    total, correct = 0.0, 0
    for i in range(0, len(x), EVAL_BATCH):
        xb, yb = x[i:i + EVAL_BATCH], y[i:i + EVAL_BATCH]
        logits = model.forward(xb)
        total += softmax_cross_entropy(logits, yb) * len(xb)
        correct += int((logits.argmax(axis=1) == yb).sum())
    return total / len(x), correct / len(x)


def run_cell(config, cell, seed, splits=None, keep_params=True):
    """Train one (cell, seed) and return its RunRecord.

    Test accuracy is measured with the weights of the epoch that reached the
    lowest validation loss. A non-finite loss or gradient stops training and
    marks the record diverged; the record is kept.
    """
    started = time.perf_counter()
    splits = splits or load_splits(config)
    rng = run_rng(config, cell, seed)
    train = splits["train"]
    if cell.fraction < 1.0:
        train = subsample(train, cell.fraction, Rng(config.master_seed).child(cell.fraction_index, seed))
    x_train, y_train = normalize_to_pm1(train), train.labels
    x_val, y_val = normalize_to_pm1(splits["val"]), splits["val"].labels

    model = build_mnist_cnn(rng.child(0), hidden=config.hidden, dropout=config.dropout)
    tensors = model.params()
    params = {k: t.data for k, t in tensors.items()}
    grads = {k: t.grad for k, t in tensors.items()}
    state = optim.make_optimizer(cell.optimizer, params, cell.eta, cell.momentum)
    shuffle = rng.child(1)

    rec = RunRecord(cell.optimizer, cell.eta, cell.momentum, cell.fraction, seed,
                    cell.eta_index, cell.momentum_index, cell.fraction_index)
    best = None
    n = len(y_train)
    with np.errstate(all="ignore"):
        for epoch in range(1, config.epochs + 1):
            order = shuffle.permutation(n)
            running = 0.0
            for i in range(0, n, config.batch_size):
                idx = order[i:i + config.batch_size]
                model.zero_grad()
                loss = model.loss(x_train[idx], y_train[idx], training=True)
                if not math.isfinite(loss):
                    rec.diverged = True
                    break
                running += loss * len(idx)
                model.loss_backward(need_dx=False)
                try:
                    optim.step(state, params, grads)
                except NonFiniteGradientError:
                    rec.diverged = True
                    break
            if rec.diverged:
                break
            val_loss, _ = evaluate(model, x_val, y_val)
            if not math.isfinite(val_loss):
                rec.diverged = True
                break
            rec.train_losses.append(running / n)
            rec.val_losses.append(val_loss)
            rec.last_finite_epoch = epoch
            if best is None or val_loss < rec.min_val_loss:
                rec.min_val_loss, rec.epoch_of_min = val_loss, epoch
                best = model.state_dict()

        if best is not None:
            model.load_state_dict(best)
            test = splits["test"]
            _, rec.test_metric = evaluate(model, normalize_to_pm1(test), test.labels)
    if keep_params:
        rec.params = best
    rec.wall_seconds = time.perf_counter() - started
    return rec


def _run_task(args):
    config_doc, cell, seed, out_dir, keep_params = args
    config = ExperimentConfig.from_dict(config_doc)
    try:
        rec = run_cell(config, cell, seed, keep_params=True)
    except Exception as exc:  # a failed cell must not abort the grid
        log.exception("run %s seed %s failed", cell, seed)
        rec = RunRecord(cell.optimizer, cell.eta, cell.momentum, cell.fraction, seed,
                        cell.eta_index, cell.momentum_index, cell.fraction_index,
                        diverged=True, error=f"{type(exc).__name__}: {exc}")
    if out_dir is not None and rec.params is not None:
        rel = Path("checkpoints") / f"{rec.run_id}.gsgd"
        save_checkpoint(Path(out_dir) / rel, rec.params)
        rec.checkpoint = rel.as_posix()
    if not keep_params:
        rec.params = None
    return rec


def run_grid(config, workers=1, out_dir=None, keep_params=True):
    """Run every cell for every seed; records come back in merge order.

    Returns ``(records, summaries)``. ``workers > 1`` dispatches runs to a
    process pool; results do not depend on the worker count.
    """
    from .reports import summarize

    if out_dir is not None:
        (Path(out_dir) / "checkpoints").mkdir(parents=True, exist_ok=True)
    tasks = [(config.to_dict(), cell, seed, out_dir, keep_params)
             for cell in iter_cells(config) for seed in config.seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(t) for t in tasks]
    records.sort(key=merge_key(config))
    return records, summarize(records)


def merge_key(config):
    opt_index = {o: i for i, o in enumerate(config.optimizers)}
    seed_index = {s: i for i, s in enumerate(config.seeds)}
    return lambda r: (opt_index[r.optimizer], r.fraction_index, r.eta_index,
                      r.momentum_index, seed_index.get(r.seed, r.seed))


def select_best_by_val_loss(records):
    """Lowest min-validation-loss; ties go to higher test metric, then lower eta index."""
    candidates = [r for r in records if not r.diverged and r.min_val_loss is not None]
    if not candidates:
        raise NoCandidateError("every record diverged")
    return min(candidates, key=lambda r: (r.min_val_loss, -(r.test_metric or 0.0), r.eta_index))


@dataclass(frozen=True)
class ConvergenceRow:
    rank: int
    eta: float
    momentum: float
    min_val_loss: float
    epoch_of_min: int
    test_metric: float


def convergence_report(records, top_n=5):
    """The ``top_n`` records by test metric with the epoch of their minimum loss."""
    ok = [r for r in records if not r.diverged and r.min_val_loss is not None]
    if len(ok) < top_n:
        raise InsufficientDataError(f"need {top_n} finished records, got {len(ok)}")
    ranked = sorted(ok, key=lambda r: (-r.score, r.eta_index, r.momentum_index, r.seed))[:top_n]
    return [ConvergenceRow(i + 1, r.eta, r.momentum, r.min_val_loss, r.epoch_of_min, r.test_metric)
            for i, r in enumerate(ranked)]


def mean_epoch_of_min(rows):
    return float(np.mean([row.epoch_of_min for row in rows]))


def _record_params(rec, base_dir):
    if rec.params is not None:
        return rec.params
    if rec.checkpoint:
        path = Path(base_dir or ".") / rec.checkpoint
        if path.exists():
            return load_checkpoint(path)
    return None


def noise_eval(top_records, noise_levels, seed, config=None, splits=None, base_dir=None):
    """Mean test error (1 - accuracy) per optimizer at each pixel-flip level.

    Each record is evaluated on the same noised test set per level. Records
    without weights are skipped with a warning and counted in ``coverage``.
    Returns ``{"errors": {opt: {level: mean}}, "coverage": {opt: (used, total)}}``.
    """
    config = config or ExperimentConfig()
    splits = splits or load_splits(config)
    test = splits["test"]
    noisy = []
    for level in noise_levels:
        data = apply_noise(test, NoiseSpec("pixel-flip", level, seed))
        noisy.append((level, normalize_to_pm1(data), data.labels))

    # one model in memory at a time; layer caches of a 500-image batch are large
    per_opt = {}
    coverage = {}
    for rec in top_records:
        used, total = coverage.get(rec.optimizer, (0, 0))
        params = _record_params(rec, base_dir)
        if params is None:
            warnings.warn(f"no checkpoint for {rec.run_id}; skipped", stacklevel=2)
            coverage[rec.optimizer] = (used, total + 1)
            continue
        coverage[rec.optimizer] = (used + 1, total + 1)
        model = build_mnist_cnn(Rng(0), hidden=config.hidden, dropout=config.dropout)
        model.load_state_dict(params)
        for level, x, y in noisy:
            _, acc = evaluate(model, x, y)
            per_opt.setdefault(rec.optimizer, {}).setdefault(level, []).append(1.0 - acc)
        del model
    errors = {opt: {level: float(np.mean(v)) for level, v in levels.items()}
              for opt, levels in per_opt.items()}
    return {"errors": errors, "coverage": coverage}


def default_workers():
    return max(1, min(4, os.cpu_count() or 1))
