"""``golden-sgd`` command line."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..bayes_core import derived_constants
from .config import Cell, ExperimentConfig
from .reports import emit_reports, load_runs, render_heatmap, summarize, top_records
from .runner import (
    convergence_report,
    mean_epoch_of_min,
    noise_eval,
    run_cell,
    run_grid,
    select_best_by_val_loss,
)


def _levels(text):
    return [float(v) if "." in v else int(v) for v in text.split(",") if v.strip()]


def cmd_constants(args):
    c = derived_constants()
    print(f"{'golden':<8}{c.golden!r}")
    print(f"{'alpha':<8}{c.alpha!r}")
    print(f"{'eta':<8}{c.eta!r}")
    print(json.dumps({"golden": c.golden, "alpha": c.alpha, "eta": c.eta}))
    return 0


def cmd_train(args):
    config = ExperimentConfig.from_json(args.config)
    eta = args.eta if args.eta is not None else config.eta_list[0]
    momentum = args.momentum if args.momentum is not None else config.momentum_list[0]
    fraction = args.fraction if args.fraction is not None else config.fractions[0]
    idx = lambda xs, v: xs.index(v) if v in xs else len(xs)  # noqa: E731
    cell = Cell(config.optimizers[0], eta, momentum, fraction,
                idx(config.eta_list, eta), idx(config.momentum_list, momentum),
                idx(config.fractions, fraction))
    seed = args.seed if args.seed is not None else config.seeds[0]
    rec = run_cell(config, cell, seed, keep_params=False)
    print(json.dumps(rec.to_dict(), sort_keys=True))
    return 0


def cmd_grid(args):
    config = ExperimentConfig.from_json(args.config)
    records, summaries = run_grid(config, workers=args.workers, out_dir=args.out, keep_params=False)
    emit_reports(records, summaries, args.out, config)
    print(f"{len(records)} runs written to {args.out}")
    return 0


def cmd_noise_eval(args):
    records, config = load_runs(args.runs)
    config = config or ExperimentConfig()
    chosen = top_records(records, summarize(records))
    result = noise_eval(chosen, _levels(args.levels), args.seed, config=config, base_dir=args.runs)
    print("optimizer  " + "  ".join(f"{lv:>8}" for lv in _levels(args.levels)))
    for opt, errs in result["errors"].items():
        print(f"{opt:<10} " + "  ".join(f"{errs[lv]:8.4f}" for lv in _levels(args.levels)))
    for opt, (used, total) in result["coverage"].items():
        print(f"# {opt}: {used}/{total} top-cell models evaluated")
    doc = {"levels": _levels(args.levels), "seed": args.seed, "mode": "pixel-flip",
           "selection": "per-image-independent",
           "errors": {o: {str(k): v for k, v in e.items()} for o, e in result["errors"].items()},
           "coverage": {o: list(c) for o, c in result["coverage"].items()}}
    Path(args.runs, "noise.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_report(args):
    records, _ = load_runs(args.runs)
    print("# validation loss is the sample mean over the full validation split")
    for s in summarize(records):
        print(f"\n== {s.optimizer} fraction={s.fraction:g}: top-{len(s.top)} mean "
              f"{s.top_mean:.4f} +/- {s.top_std:.4f}; best eta={s.best[0]:g} momentum={s.best[1]:g}")
        for e, m in s.top:
            p = s.wilcoxon.get((e, m))
            ptxt = "" if p is None else f"  wilcoxon p={p:.4f}"
            print(f"   eta={e:<8g} momentum={m:<6g} mean={s.cell_means[(e, m)]:.4f}{ptxt}")
    means = {}
    for opt in sorted({r.optimizer for r in records}):
        recs = [r for r in records if r.optimizer == opt]
        try:
            best = select_best_by_val_loss(recs)
            print(f"\n{opt}: best by validation loss eta={best.eta:g} momentum={best.momentum:g} "
                  f"loss={best.min_val_loss:.4f} acc={best.test_metric:.4f}")
            rows = convergence_report(recs, top_n=min(5, len(recs)))
        except ValueError as exc:
            print(f"\n{opt}: {exc}")
            continue
        print(" rank  eta       momentum  min_val_loss  epoch_of_min")
        for row in rows:
            print(f" {row.rank:<5} {row.eta:<9g} {row.momentum:<9g} {row.min_val_loss:<13.4f} {row.epoch_of_min}")
        means[opt] = mean_epoch_of_min(rows)
        print(f" mean epoch of minimum validation loss: {means[opt]:.2f}")
    if {"sgd", "adam"} <= set(means):
        flag = "yes" if means["adam"] < means["sgd"] else "no"
        print(f"\nadam reaches its minimum earlier than sgd: {flag} "
              f"(adam {means['adam']:.2f} vs sgd {means['sgd']:.2f})")
    return 0


def cmd_plot(args):
    records, _ = load_runs(args.runs)
    Path(args.out).write_text(render_heatmap(summarize(records)))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="golden-sgd", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("constants", help="print golden ratio, momentum and learning rate").set_defaults(fn=cmd_constants)

    t = sub.add_parser("train", help="train a single grid cell")
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int)
    t.add_argument("--eta", type=float)
    t.add_argument("--momentum", type=float)
    t.add_argument("--fraction", type=float)
    t.set_defaults(fn=cmd_train)

    g = sub.add_parser("grid", help="run the full grid search")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--workers", type=int, default=1)
    g.set_defaults(fn=cmd_grid)

    n = sub.add_parser("noise-eval", help="error of the top models under pixel-flip noise")
    n.add_argument("--runs", required=True)
    n.add_argument("--levels", default="0,5,10")
    n.add_argument("--seed", type=int, default=0)
    n.set_defaults(fn=cmd_noise_eval)

    r = sub.add_parser("report", help="top cells, best-by-loss and convergence epochs")
    r.add_argument("--runs", required=True)
    r.set_defaults(fn=cmd_report)

    pl = sub.add_parser("plot", help="render the grid heatmap as SVG")
    pl.add_argument("--runs", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(fn=cmd_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
