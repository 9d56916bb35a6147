"""Synthetic flat/step mean datasets with a two-level noise scale.

Every structure is built from the same standard-normal baseline errors,
``y_x = mu_x + sigma_x * e_x``, so datasets for different structures at the
same replication index are coupled (common random numbers).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .tree import Dataset

MEANS = ("flat", "step")


def compromise_sigma(c2: float) -> float:
    """Constant noise scale whose variance matches the c1=1 / c2 structure on average."""
    if c2 <= 0:
        raise ValueError(f"c2 must be positive, got {c2}")
    return math.sqrt((1.0 + c2 * c2) / 2.0)


@dataclass(frozen=True)
class StructureSpec:
    """A mean structure plus a piecewise-constant noise scale.

    ``sigma_x = c1`` for ``x <= break_x`` and ``c2`` above it. Scales may be
    zero, which yields noiseless halves.
    """

    mean: str = "flat"
    c1: float = 1.0
    c2: float = 1.0
    n: int = 1000
    break_x: int = 500
    segment_len: int = 100
    label: Optional[str] = None

    def __post_init__(self) -> None:
        if self.mean not in MEANS:
            raise ValueError(f"mean must be one of {MEANS}, got {self.mean!r}")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError(f"noise scales must be >= 0, got c1={self.c1}, c2={self.c2}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.segment_len < 1:
            raise ValueError(f"segment_len must be >= 1, got {self.segment_len}")

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        m = "F" if self.mean == "flat" else "S"
        if self.c1 == self.c2:
            return f"{m}C({self.c2:g})"
        if self.c1 == 1:
            return f"{m}H({self.c2:g})"
        return f"{m}[{self.c1:g},{self.c2:g}]"

    @property
    def x(self) -> np.ndarray:
        return np.arange(1, self.n + 1, dtype=float)

    def mu(self) -> np.ndarray:
        if self.mean == "flat":
            return np.zeros(self.n)
        return np.ceil(self.x / self.segment_len)

    def sigma(self) -> np.ndarray:
        return np.where(self.x <= self.break_x, self.c1, self.c2).astype(float)

    def jump_locations(self) -> np.ndarray:
        """Midpoints between adjacent segments, where the true mean steps up."""
        if self.mean == "flat":
            return np.empty(0)
        k = np.arange(1, math.ceil(self.n / self.segment_len))
        return k * self.segment_len + 0.5


def flat(c2: float = 1.0, c1: float = 1.0, **kw) -> StructureSpec:
    return StructureSpec("flat", c1, c2, **kw)


def step(c2: float = 1.0, c1: float = 1.0, **kw) -> StructureSpec:
    return StructureSpec("step", c1, c2, **kw)


def compromise(base: StructureSpec) -> StructureSpec:
    """Homoscedastic twin of a c1=1 structure with matched average variance."""
    s = compromise_sigma(base.c2)
    m = "F" if base.mean == "flat" else "S"
    return StructureSpec(
        base.mean, s, s, base.n, base.break_x, base.segment_len,
        label=f"{m}Cc({base.c2:g})",
    )


def _substream(seed: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replication,)))


@dataclass(frozen=True)
class BaselineErrors:
    """Standard-normal baseline errors, regenerable row by row.

    Row ``j`` depends only on ``(seed, j)``, so rows can be produced in any
    order, separately or in batches, with identical values.
    """

    seed: int
    n: int
    replications: int

    def row(self, replication: int) -> np.ndarray:
        if not 0 <= replication < self.replications:
            raise ValueError(
                f"replication {replication} out of range [0, {self.replications})"
            )
        return _substream(self.seed, replication).standard_normal(self.n)

    @property
    def errors(self) -> np.ndarray:
        """All rows as a ``(replications, n)`` matrix."""
        return np.stack([self.row(j) for j in range(self.replications)])


def generate_baseline(seed: int, n: int, replications: int) -> BaselineErrors:
    if n < 1 or replications < 1:
        raise ValueError(f"need n >= 1 and replications >= 1, got {n}, {replications}")
    return BaselineErrors(seed, n, replications)


def realize_from(errors: np.ndarray, spec: StructureSpec) -> Dataset:
    if errors.shape != (spec.n,):
        raise ValueError(f"baseline row has shape {errors.shape}, expected ({spec.n},)")
    mu = spec.mu()
    return Dataset(spec.x, mu + spec.sigma() * errors, mu)


def realize(baseline: BaselineErrors, spec: StructureSpec, replication: int) -> Dataset:
    """Dataset ``y = mu + sigma * e`` for one replication, with ``mu`` attached."""
    if spec.n != baseline.n:
        raise ValueError(f"spec has n={spec.n} but baseline has n={baseline.n}")
    return realize_from(baseline.row(replication), spec)


def export_csv(dataset: Dataset, spec: StructureSpec, path: str | os.PathLike) -> None:
    """Write ``x,y,mu,sigma`` rows with a header."""
    mu = dataset.mu if dataset.mu is not None else spec.mu()
    sigma = spec.sigma()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "mu", "sigma"])
        for row in zip(dataset.x, dataset.y, mu, sigma):
            w.writerow([repr(float(v)) for v in row])


def read_csv(path: str | os.PathLike) -> Dataset:
    """Load a dataset from a CSV with ``x`` and ``y`` columns (``mu`` optional)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    missing = {"x", "y"} - set(rows[0])
    if missing:
        raise ValueError(f"{path}: missing column(s) {sorted(missing)}")
    x = [float(r["x"]) for r in rows]
    y = [float(r["y"]) for r in rows]
    mu = [float(r["mu"]) for r in rows] if "mu" in rows[0] else None
    return Dataset.from_unsorted(x, y, mu)
