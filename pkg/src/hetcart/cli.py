"""Command-line entry point: ``hetcart run`` and ``hetcart fit``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import output
from .errors import ConfigError
from .pruning import PruneConfig, Rule, fit
from .runner import SCENARIOS, ExperimentConfig, FULL_SWEEP, run_sweep
from .simgen import read_csv
from .tree import CP_RULES, GrowthConfig, format_tree, tree_to_dict

OUT_ENV = "HETCART_OUT"
_RULES = {"min": Rule.MIN_CV, "1se": Rule.ONE_SE}
_SCENARIO_MEAN = {"zero_variance_lower": "step", "regrow_low_cp": "step"}


def _c2_values(text: str) -> tuple[float, ...]:
    if text == "sweep":
        return FULL_SWEEP
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'sweep' or comma-separated numbers, got {text!r}")


def _add_growth_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cp", type=float, default=0.01, help="minimum SSE gain relative to the root (default 0.01)")
    p.add_argument(
        "--cp-rule",
        choices=CP_RULES,
        default="subtree",
        help="'subtree' (rpart semantics, default) or 'local' (each split's own gain must reach cp)",
    )
    p.add_argument("--minbucket", type=int, default=7)
    p.add_argument("--minsplit", type=int, default=20)
    p.add_argument("--max-depth", type=int, default=30)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--prune-rule", choices=sorted(_RULES), default="min")
    p.add_argument("--fold-seed", type=int, default=0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetcart", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a replication sweep and write CSV/SVG outputs")
    run.add_argument("--scenario", choices=SCENARIOS, default="custom")
    run.add_argument("--mean", choices=("flat", "step"), default=None)
    run.add_argument("--c1", type=float, default=1.0)
    run.add_argument("--c2", type=_c2_values, default=None, help="a value, a comma list, or 'sweep' (1..10)")
    run.add_argument("--reps", type=int, default=1000)
    run.add_argument("--seed", type=int, default=2014)
    run.add_argument("--n", type=int, default=1000)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./results)")
    run.add_argument("--no-plots", action="store_true")
    run.add_argument("--dump-trees", action="store_true")
    _add_growth_flags(run)

    f = sub.add_parser("fit", help="fit and prune one tree from a CSV with x,y columns")
    f.add_argument("--input", required=True)
    f.add_argument("--json", dest="json_out", default=None, help="also write the fit as JSON to this path ('-' for stdout)")
    _add_growth_flags(f)
    return parser


def _configs(args) -> tuple[GrowthConfig, PruneConfig]:
    growth = GrowthConfig(
        cp=args.cp,
        minbucket=args.minbucket,
        minsplit=args.minsplit,
        max_depth=args.max_depth,
        cp_rule=args.cp_rule,
    )
    prune = PruneConfig(n_folds=args.folds, rule=_RULES[args.prune_rule], fold_seed=args.fold_seed)
    return growth, prune


def _cmd_run(args) -> int:
    growth, prune = _configs(args)
    mean = args.mean or _SCENARIO_MEAN.get(args.scenario, "flat")
    config = ExperimentConfig(
        scenario=args.scenario,
        mean=mean,
        c1=args.c1,
        c2=args.c2,
        replications=args.reps,
        seed=args.seed,
        growth=growth,
        prune=prune,
        n=args.n,
        workers=args.workers,
        dump_trees=args.dump_trees,
    )
    out_dir = args.out or os.environ.get(OUT_ENV) or "results"
    result = run_sweep(config)
    output.emit_outputs(result, out_dir, plots=not args.no_plots)
    ratios = result.ratios()
    for r in result.reports:
        line = f"{r.name:>12}  splits {r.avg_splits:7.3f}  mse {r.avg_mse_total:.5g} (lower {r.avg_mse_lower:.5g}, upper {r.avg_mse_upper:.5g})"
        if r.name in ratios:
            line += f"  ratio {ratios[r.name]:.3f}"
        print(line)
    print(f"wrote {out_dir}")
    return 0


def _cmd_fit(args) -> int:
    growth, prune = _configs(args)
    data = read_csv(args.input)
    if prune.n_folds > len(data):
        raise ConfigError(f"--folds {prune.n_folds} exceeds the {len(data)} rows in {args.input}")
    result = fit(data, growth, prune)
    print(f"{len(data)} points; full tree {result.full_tree.n_leaves} leaves, pruned tree {result.tree.n_leaves} leaves (alpha {result.alpha:.6g})")
    print()
    print(format_tree(result.tree))
    print()
    print(f"{'alpha':>14} {'leaves':>6} {'train_sse':>14} {'cv_error':>12} {'cv_se':>12}")
    for a, k, r, e, s in result.path.rows:
        e_txt = "" if e is None else f"{e:12.6g}"
        s_txt = "" if s is None else f"{s:12.6g}"
        mark = " <" if k == result.tree.n_leaves else ""
        print(f"{a:14.6g} {k:6d} {r:14.6g} {e_txt:>12} {s_txt:>12}{mark}")
    if args.json_out:
        doc = {
            "alpha": result.alpha,
            "tree": tree_to_dict(result.tree),
            "cp_path": [
                dict(zip(("alpha", "n_leaves", "train_sse", "cv_error", "cv_se"), row))
                for row in result.path.rows
            ],
        }
        text = json.dumps(doc, indent=2)
        if args.json_out == "-":
            print(text)
        else:
            with open(args.json_out, "w") as fh:
                fh.write(text + "\n")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_fit(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"hetcart: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
