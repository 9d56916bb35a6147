"""Replication sweeps over mean/variance structures and their presets."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import simgen
from .errors import ConfigError
from .metrics import (
    AggregateReport,
    ReplicationSummary,
    aggregate,
    jump_recovery,
    mse_ratio,
    summarize_tree,
)
from .pruning import PruneConfig, fit
from .simgen import StructureSpec
from .tree import GrowthConfig, tree_to_dict

log = logging.getLogger(__name__)

SCENARIOS = (
    "table1",
    "table2",
    "fig_splits",
    "fig_mse",
    "zero_variance_lower",
    "regrow_low_cp",
    "custom",
)
FULL_SWEEP = tuple(float(c) for c in range(1, 11))
FIGURE_SWEEP = (1.0, 5.0, 10.0)
REGROW_CP = 1e-6
JUMP_RADIUS = 10.0


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "custom"
    mean: str = "flat"
    c1: float = 1.0
    c2: Optional[Sequence[float]] = None
    replications: int = 1000
    seed: int = 2014
    growth: GrowthConfig = GrowthConfig()
    prune: PruneConfig = PruneConfig()
    n: int = 1000
    break_x: int = 500
    segment_len: int = 100
    regrow_cp: float = REGROW_CP
    jump_radius: float = JUMP_RADIUS
    workers: int = 1
    reverse: bool = False
    dump_trees: bool = False

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.mean not in simgen.MEANS:
            raise ConfigError(f"mean must be one of {simgen.MEANS}, got {self.mean!r}")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if self.c2 is not None:
            c2 = tuple(float(c) for c in self.c2)
            if not c2:
                raise ConfigError("empty c2 sweep")
            object.__setattr__(self, "c2", c2)
        if self.c1 < 0 or any(c < 0 for c in self.c2 or ()):
            raise ConfigError("noise scales must be non-negative")
        if self.prune.n_folds > self.n:
            raise ConfigError(f"n_folds={self.prune.n_folds} exceeds n={self.n}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    def sweep(self, default: Sequence[float]) -> tuple[float, ...]:
        values = tuple(self.c2) if self.c2 is not None else tuple(default)
        if any(c <= 0 for c in values):
            raise ConfigError(f"sweep values must be positive, got {values}")
        return values

    def spec(self, mean: str, c1: float, c2: float, label: Optional[str] = None) -> StructureSpec:
        return StructureSpec(mean, c1, c2, self.n, self.break_x, self.segment_len, label=label)

    @property
    def recovery_mode(self) -> bool:
        return self.scenario == "regrow_low_cp"

    @property
    def effective_growth(self) -> GrowthConfig:
        if self.recovery_mode:
            return replace(self.growth, cp=self.regrow_cp)
        return self.growth


@dataclass(frozen=True)
class SweepResult:
    config: ExperimentConfig
    reports: list[AggregateReport]
    pairs: list[tuple[str, str]] = field(default_factory=list)
    trees: Optional[dict[str, list[dict]]] = None

    def report(self, name: str) -> AggregateReport:
        for r in self.reports:
            if r.name == name:
                return r
        raise KeyError(name)

    def ratios(self) -> dict[str, float]:
        """MSE ratio of each paired heteroscedastic structure, keyed by its name."""
        return {het: mse_ratio(self.report(het), self.report(comp)) for het, comp in self.pairs}


def plan(config: ExperimentConfig) -> tuple[list[StructureSpec], list[tuple[str, str]]]:
    """Structures a scenario runs, and the (heteroscedastic, compromise) pairs."""
    sc = config.scenario
    specs: list[StructureSpec] = []
    pairs: list[tuple[str, str]] = []

    def paired(mean: str, c: float) -> None:
        het = config.spec(mean, 1.0, c)
        comp = simgen.compromise(het)
        specs.extend([het, comp])
        pairs.append((het.name, comp.name))

    if sc == "table1":
        for c in config.sweep(FULL_SWEEP):
            specs.append(config.spec("flat", 1.0, c))
        for c in config.sweep(FULL_SWEEP):
            specs.append(simgen.compromise(config.spec("step", 1.0, c)))
        for c in config.sweep(FULL_SWEEP):
            specs.append(config.spec("step", 1.0, c))
    elif sc in ("table2", "fig_mse"):
        for mean in ("flat", "step"):
            for c in config.sweep(FULL_SWEEP):
                paired(mean, c)
    elif sc == "fig_splits":
        for c in config.sweep(FIGURE_SWEEP):
            specs.append(config.spec("flat", 1.0, c))
        for c in config.sweep(FIGURE_SWEEP):
            specs.append(config.spec("step", c, c))
        for c in config.sweep(FIGURE_SWEEP):
            specs.append(config.spec("step", 1.0, c))
    elif sc == "zero_variance_lower":
        if config.mean != "step":
            raise ConfigError("zero_variance_lower needs the step mean")
        for c in config.sweep(FIGURE_SWEEP):
            specs.append(config.spec("step", 0.0, c, label=f"SZ({c:g})"))
            specs.append(config.spec("step", 1.0, c))
    elif sc == "regrow_low_cp":
        for c in config.c2 if config.c2 is not None else (10.0,):
            specs.append(config.spec(config.mean, config.c1, c))
    else:
        c2 = config.c2 if config.c2 is not None else (config.c1,)
        for c in c2:
            specs.append(config.spec(config.mean, config.c1, c))

    seen: dict[str, StructureSpec] = {}
    for s in specs:
        seen.setdefault(s.name, s)
    return list(seen.values()), pairs


def replication_fold_seed(config: ExperimentConfig, replication: int) -> int:
    ss = np.random.SeedSequence(config.seed, spawn_key=(replication, 1, config.prune.fold_seed))
    return int(ss.generate_state(1)[0])


def _recovery_extras(spec: StructureSpec, pre: np.ndarray, post: np.ndarray, radius: float) -> dict:
    jumps = spec.jump_locations()
    if jumps.size == 0:
        return {"splits_pre_prune": float(pre.size)}
    lower = jumps < spec.break_x
    hit_pre = jump_recovery(pre, jumps, radius)
    hit_post = jump_recovery(post, jumps, radius)
    out = {
        "splits_pre_prune": float(pre.size),
        "jump_recovery_pre": float(hit_pre.mean()),
        "jump_recovery_post": float(hit_post.mean()),
    }
    if lower.any():
        out["lower_recovery_pre"] = float(hit_pre[lower].mean())
        out["lower_recovery_post"] = float(hit_post[lower].mean())
    if (~lower).any():
        out["upper_recovery_pre"] = float(hit_pre[~lower].mean())
        out["upper_recovery_post"] = float(hit_post[~lower].mean())
    return out


def run_replication(
    config: ExperimentConfig, specs: Sequence[StructureSpec], replication: int
) -> tuple[list[ReplicationSummary], list[Optional[dict]]]:
    """Fit every structure on the coupled datasets of one replication."""
    errors = simgen.generate_baseline(config.seed, config.n, config.replications).row(replication)
    prune_cfg = replace(config.prune, fold_seed=replication_fold_seed(config, replication))
    growth = config.effective_growth
    done: dict[tuple, tuple[ReplicationSummary, Optional[dict]]] = {}
    summaries, trees = [], []
    for spec in specs:
        key = (spec.mean, spec.c1, spec.c2)
        if key not in done:
            ds = simgen.realize_from(errors, spec)
            result = fit(ds, growth, prune_cfg)
            summary = summarize_tree(result.tree, ds, spec.break_x)
            if spec.mean == "step":
                extras = _recovery_extras(
                    spec,
                    np.sort(result.full_tree.thresholds),
                    np.asarray(summary.split_locations),
                    config.jump_radius,
                )
                summary = replace(summary, extras=extras)
            dump = None
            if config.dump_trees:
                dump = {"replication": replication, "alpha": result.alpha, "tree": tree_to_dict(result.tree)}
            done[key] = (summary, dump)
        summaries.append(done[key][0])
        trees.append(done[key][1])
    return summaries, trees


def _run_block(args):
    config, specs, block = args
    return [(j, *run_replication(config, specs, j)) for j in block]


def run_sweep(config: ExperimentConfig) -> SweepResult:
    """Run all replications of a scenario and aggregate per structure.

    One baseline error row per replication is shared by every structure.
    Replications may run in any order or across worker processes; results
    are always reduced in replication-index order.
    """
    specs, pairs = plan(config)
    order = list(range(config.replications))
    if config.reverse:
        order.reverse()
    log.info("scenario %s: %d structures x %d replications", config.scenario, len(specs), len(order))

    if config.workers > 1:
        blocks = [order[i :: config.workers] for i in range(config.workers)]
        with ProcessPoolExecutor(config.workers) as pool:
            rows = [r for part in pool.map(_run_block, [(config, specs, b) for b in blocks]) for r in part]
    else:
        rows = _run_block((config, specs, order))
    rows.sort(key=lambda r: r[0])

    reports = [
        aggregate(spec, [r[1][i] for r in rows])
        for i, spec in enumerate(specs)
    ]
    trees = None
    if config.dump_trees:
        trees = {spec.name: [r[2][i] for r in rows] for i, spec in enumerate(specs)}
    return SweepResult(config=config, reports=reports, pairs=pairs, trees=trees)


def run_zero_variance_experiment(config: ExperimentConfig) -> SweepResult:
    """Step mean with a noiseless lower half, alongside the matching SH runs."""
    return run_sweep(replace(config, scenario="zero_variance_lower", mean="step"))


def run_regrow_low_cp(config: ExperimentConfig) -> SweepResult:
    """Grow with a near-zero cp, then prune; reports jump recovery before and after."""
    return run_sweep(replace(config, scenario="regrow_low_cp"))
