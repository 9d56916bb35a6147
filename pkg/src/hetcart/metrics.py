"""Per-tree performance measures and their aggregation across replications."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidStateError
from .simgen import StructureSpec
from .tree import Dataset, Tree, predict


@dataclass(frozen=True)
class ReplicationSummary:
    split_count: int
    split_locations: tuple[float, ...]
    mse_total: float
    mse_lower: float
    mse_upper: float
    extras: dict = field(default_factory=dict, compare=False)


def summarize_tree(tree: Tree, dataset: Dataset, break_x: float = 500) -> ReplicationSummary:
    """Split inventory and per-point MSE against the true means.

    The lower half is ``x <= break_x``; a half with no points gets NaN.
    """
    if dataset.mu is None:
        raise InvalidStateError("dataset carries no true means")
    sq = (predict(tree, dataset.x) - dataset.mu) ** 2
    lower = dataset.x <= break_x
    locs = tuple(float(t) for t in np.sort(tree.thresholds))
    return ReplicationSummary(
        split_count=len(locs),
        split_locations=locs,
        mse_total=float(sq.mean()),
        mse_lower=float(sq[lower].mean()) if lower.any() else math.nan,
        mse_upper=float(sq[~lower].mean()) if (~lower).any() else math.nan,
    )


def histogram_splits(summaries: Iterable[ReplicationSummary], n: Optional[int] = None) -> dict[int, int]:
    """Count split thresholds per integer bin ``floor(threshold)``.

    Keys are sorted ascending. When ``n`` is given, thresholds outside
    ``(1, n)`` are rejected.
    """
    counts: Counter[int] = Counter()
    for s in summaries:
        for t in s.split_locations:
            if n is not None and not 1 < t < n:
                raise ValueError(f"threshold {t} outside (1, {n})")
            counts[math.floor(t)] += 1
    return dict(sorted(counts.items()))


def jump_recovery(locations: Sequence[float], jumps: Sequence[float], radius: float = 10.0) -> np.ndarray:
    """Boolean per jump: is some split within ``radius`` of it."""
    jumps = np.asarray(jumps, dtype=float)
    locs = np.asarray(locations, dtype=float)
    if locs.size == 0:
        return np.zeros(jumps.size, dtype=bool)
    return (np.abs(jumps[:, None] - locs[None, :]) <= radius).any(axis=1)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return math.nan, math.nan
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), se


@dataclass(frozen=True)
class AggregateReport:
    spec: StructureSpec
    replications: int
    avg_splits: float
    avg_splits_se: float
    split_histogram: dict[int, int]
    avg_mse_total: float
    avg_mse_lower: float
    avg_mse_upper: float
    avg_mse_total_se: float = math.nan
    avg_mse_lower_se: float = math.nan
    avg_mse_upper_se: float = math.nan
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def name(self) -> str:
        return self.spec.name


def aggregate(spec: StructureSpec, summaries: Sequence[ReplicationSummary]) -> AggregateReport:
    """Means (and standard errors) over replications, in the order given.

    Numeric ``extras`` present in every summary are averaged into the
    report's ``extras`` under the same keys.
    """
    if not summaries:
        raise ValueError("no replication summaries to aggregate")
    splits = np.array([s.split_count for s in summaries], dtype=float)
    tot = np.array([s.mse_total for s in summaries])
    low = np.array([s.mse_lower for s in summaries])
    up = np.array([s.mse_upper for s in summaries])
    avg_splits, splits_se = _mean_se(splits)
    m_tot, se_tot = _mean_se(tot)
    m_low, se_low = _mean_se(low)
    m_up, se_up = _mean_se(up)
    keys = set(summaries[0].extras)
    for s in summaries[1:]:
        keys &= set(s.extras)
    extras = {k: float(np.mean([s.extras[k] for s in summaries])) for k in sorted(keys)}
    return AggregateReport(
        spec=spec,
        replications=len(summaries),
        avg_splits=avg_splits,
        avg_splits_se=splits_se,
        split_histogram=histogram_splits(summaries),
        avg_mse_total=m_tot,
        avg_mse_lower=m_low,
        avg_mse_upper=m_up,
        avg_mse_total_se=se_tot,
        avg_mse_lower_se=se_low,
        avg_mse_upper_se=se_up,
        extras=extras,
    )


def mse_ratio(het_report: AggregateReport, compromise_report: AggregateReport) -> float:
    """Average total MSE of a heteroscedastic run over that of its compromise twin."""
    if het_report.spec.mean != compromise_report.spec.mean:
        raise ValueError("reports use different mean structures")
    if compromise_report.avg_mse_total == 0:
        raise InvalidStateError("compromise report has zero average MSE")
    return het_report.avg_mse_total / compromise_report.avg_mse_total


def pooled_mean_variance(c1: float, c2: float, n_half: int) -> float:
    """Variance of the mean of both halves pooled (``n_half`` points each)."""
    return (c1 * c1 + c2 * c2) / (4.0 * n_half)


def lower_mean_variance(c1: float, n_half: int) -> float:
    """Variance of the mean of the lower half alone."""
    return c1 * c1 / n_half


def single_split_threshold(c1: float, c2: float) -> bool:
    """True when splitting at the variance break estimates the lower half's mean
    with less variance than pooling, i.e. ``c2**2 > 3 * c1**2``."""
    if c1 <= 0 or c2 <= 0:
        raise ValueError(f"c1 and c2 must be positive, got {c1}, {c2}")
    return c2 * c2 > 3.0 * c1 * c1
