"""CSV, JSON and SVG outputs of a sweep."""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import re
from pathlib import Path

from .metrics import AggregateReport
from .runner import SweepResult

SUMMARY_COLUMNS = [
    "structure",
    "c1",
    "c2",
    "replications",
    "avg_splits",
    "avg_splits_se",
    "avg_mse_total",
    "avg_mse_lower",
    "avg_mse_upper",
]


def _num(v) -> str:
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def file_stem(name: str) -> str:
    """``FH(10)`` -> ``FH_10``; ``S[0,2.5]`` -> ``S_0_2.5``."""
    stem = re.sub(r"[^A-Za-z0-9.]+", "_", name)
    return stem.strip("_")


def _open(path: Path):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_summary(result: SweepResult, path: Path) -> None:
    ratios = result.ratios()
    partner = {het: comp for het, comp in result.pairs}
    extra_keys = sorted({k for r in result.reports for k in r.extras})
    header = list(SUMMARY_COLUMNS)
    if result.pairs:
        header += ["compromise", "mse_ratio"]
    header += extra_keys
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in result.reports:
            row = [
                r.name,
                _num(r.spec.c1),
                _num(r.spec.c2),
                str(r.replications),
                _num(r.avg_splits),
                _num(r.avg_splits_se),
                _num(r.avg_mse_total),
                _num(r.avg_mse_lower),
                _num(r.avg_mse_upper),
            ]
            if result.pairs:
                if r.name in ratios:
                    row += [partner[r.name], _num(ratios[r.name])]
                else:
                    row += ["", ""]
            row += [_num(r.extras[k]) if k in r.extras else "" for k in extra_keys]
            w.writerow(row)


def write_histogram(report: AggregateReport, path: Path) -> None:
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "count"])
        for x, count in sorted(report.split_histogram.items()):
            if count:
                w.writerow([x, count])


def write_metadata(result: SweepResult, path: Path) -> None:
    cfg = dataclasses.asdict(result.config)
    cfg["prune"]["rule"] = result.config.prune.rule.value
    meta = {
        "config": cfg,
        "structures": [dataclasses.asdict(r.spec) | {"name": r.name} for r in result.reports],
        "pairs": result.pairs,
        "jump_radius": result.config.jump_radius,
    }
    with _open(path) as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pyplot():
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "hetcart"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def plot_histogram(report: AggregateReport, path: Path) -> None:
    plt = _pyplot()
    n = report.spec.n
    counts = [report.split_histogram.get(x, 0) for x in range(1, n + 1)]
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(range(1, n + 1), counts, lw=0.8, color="black")
    ax.set_xlim(1, n)
    ax.set_xlabel("x")
    ax.set_ylabel("number of splits")
    ax.set_title(f"{report.name}: {report.replications} datasets")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_mse_sweep(result: SweepResult, mean: str, path: Path) -> bool:
    """Lower/upper-half MSE against c2 for the paired structures of one mean.

    Returns False (and writes nothing) when fewer than two sweep points exist.
    """
    pairs = [(result.report(h), result.report(c)) for h, c in result.pairs]
    pairs = [p for p in pairs if p[0].spec.mean == mean]
    if len(pairs) < 2:
        return False
    plt = _pyplot()
    c2 = [h.spec.c2 for h, _ in pairs]
    fig, ax = plt.subplots(figsize=(6, 4))
    for idx, (label, colour) in enumerate([("heteroscedastic", "tab:red"), ("compromise", "tab:blue")]):
        reps = [p[idx] for p in pairs]
        ax.plot(c2, [r.avg_mse_lower for r in reps], "-", color=colour, label=f"{label}, lower half")
        ax.plot(c2, [r.avg_mse_upper for r in reps], "--", color=colour, label=f"{label}, upper half")
    ax.set_xlabel("upper-half standard deviation c2")
    ax.set_ylabel("average MSE per point")
    ax.set_title(f"{mean} mean")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return True


def emit_outputs(result: SweepResult, out_dir: str | os.PathLike, plots: bool = True) -> list[Path]:
    """Write summary.csv, per-structure histograms, metadata and plots.

    Returns the paths written.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    written = [out / "summary.csv", out / "metadata.json"]
    write_summary(result, written[0])
    write_metadata(result, written[1])
    for r in result.reports:
        p = out / f"split_histogram_{file_stem(r.name)}.csv"
        write_histogram(r, p)
        written.append(p)
        if plots:
            p = out / f"split_histogram_{file_stem(r.name)}.svg"
            plot_histogram(r, p)
            written.append(p)
    if plots:
        for mean in ("flat", "step"):
            p = out / f"mse_by_half_{mean}.svg"
            if plot_mse_sweep(result, mean, p):
                written.append(p)
    if result.trees is not None:
        tdir = out / "trees"
        tdir.mkdir(exist_ok=True)
        for name, items in result.trees.items():
            p = tdir / f"{file_stem(name)}.jsonl"
            with _open(p) as fh:
                for item in items:
                    fh.write(json.dumps(item, sort_keys=True) + "\n")
            written.append(p)
    return written
