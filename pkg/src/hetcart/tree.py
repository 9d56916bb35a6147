"""Single-predictor regression trees grown by exhaustive SSE split search.

Trees are stored as flat node arrays in preorder, so every subtree occupies a
contiguous index block ``[t, subtree_end[t])`` and children always have larger
indices than their parent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

CP_RULES = ("local", "subtree")

# Reductions within this relative distance of the best one count as ties.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Ordered ``(x, y)`` pairs, optionally carrying the true means ``mu``.

    ``x`` must be sorted non-decreasing. Use :meth:`from_unsorted` when the
    input order is arbitrary.
    """

    x: np.ndarray
    y: np.ndarray
    mu: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        x = np.ascontiguousarray(self.x, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float)
        if x.ndim != 1 or y.ndim != 1:
            raise ValueError("x and y must be one-dimensional")
        if x.size < 1:
            raise ValueError("dataset must contain at least one point")
        if y.size != x.size:
            raise ValueError(f"y has length {y.size}, expected {x.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("x and y must be finite")
        if np.any(np.diff(x) < 0):
            raise ValueError("x must be sorted non-decreasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.mu is not None:
            mu = np.ascontiguousarray(self.mu, dtype=float)
            if mu.shape != x.shape:
                raise ValueError(f"mu has shape {mu.shape}, expected {x.shape}")
            object.__setattr__(self, "mu", mu)

    @classmethod
    def from_unsorted(cls, x, y, mu=None) -> "Dataset":
        x = np.asarray(x, dtype=float)
        order = np.argsort(x, kind="stable")
        return cls(
            x[order],
            np.asarray(y, dtype=float)[order],
            None if mu is None else np.asarray(mu, dtype=float)[order],
        )

    def __len__(self) -> int:
        return self.x.size

    def subset(self, index: np.ndarray) -> "Dataset":
        """Rows at ``index`` (kept in ascending order so ``x`` stays sorted)."""
        index = np.sort(np.asarray(index))
        return Dataset(
            self.x[index],
            self.y[index],
            None if self.mu is None else self.mu[index],
        )


@dataclass(frozen=True)
class SplitCandidate:
    threshold: float
    sse_reduction: float
    left_count: int
    right_count: int


@dataclass(frozen=True)
class GrowthConfig:
    """Stopping rules for :func:`grow`.

    Parameters
    ----------
    cp : float
        Complexity threshold as a fraction of the root SSE; the absolute
        threshold is ``alpha = cp * SSE(root)``.
    minbucket : int
        Minimum number of points in each child.
    minsplit : int
        Minimum number of points a node needs before a split is attempted.
    max_depth : int
        Hard bound on node depth (root has depth 0).
    cp_rule : {"local", "subtree"}
        ``"local"`` accepts a split only if its own SSE reduction is at least
        ``alpha``. ``"subtree"`` follows rpart: a split survives when the
        average reduction per split of the subtree below it (after weaker
        descendants collapse) exceeds ``alpha``, so a weak split can be kept
        for the strong splits it enables. The default is ``"subtree"``.
    """

    cp: float = 0.01
    minbucket: int = 7
    minsplit: int = 20
    max_depth: int = 30
    cp_rule: str = "subtree"

    def __post_init__(self) -> None:
        if not 0.0 <= self.cp <= 1.0:
            raise ValueError(f"cp must lie in [0, 1], got {self.cp}")
        if self.minbucket < 1:
            raise ValueError(f"minbucket must be >= 1, got {self.minbucket}")
        if self.minsplit < 2:
            raise ValueError(f"minsplit must be >= 2, got {self.minsplit}")
        if self.max_depth < 0:
            raise ValueError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.cp_rule not in CP_RULES:
            raise ValueError(f"cp_rule must be one of {CP_RULES}, got {self.cp_rule!r}")


def _check_range(n: int, start: int, stop: Optional[int]) -> tuple[int, int]:
    stop = n if stop is None else stop
    if not 0 <= start < stop <= n:
        raise ValueError(f"invalid index range [{start}, {stop}) for {n} points")
    return start, stop


def _sse(y: np.ndarray) -> float:
    d = y - y.mean()
    return float(d @ d)


def node_sse(dataset: Dataset, start: int = 0, stop: Optional[int] = None) -> float:
    """Sum of squared deviations from the mean of ``y[start:stop]``."""
    start, stop = _check_range(len(dataset), start, stop)
    return _sse(dataset.y[start:stop])


def _scan(x: np.ndarray, y: np.ndarray, minbucket: int) -> tuple[int, float]:
    """Best legal cut position in one node.

    Returns ``(k, reduction)`` where the left child is ``[:k]``; ``k == 0``
    means no legal cut exists.
    """
    n = y.size
    if n < 2 or n < 2 * minbucket:
        return 0, 0.0
    yc = y - y.mean()
    total = yc.sum()
    left = np.cumsum(yc)[:-1]
    nl = np.arange(1, n, dtype=float)
    nr = n - nl
    right = total - left
    red = left * left / nl + right * right / nr - total * total / n
    legal = x[1:] > x[:-1]
    legal[: minbucket - 1] = False
    legal[n - minbucket:] = False
    if not legal.any():
        return 0, 0.0
    red = np.where(legal, red, -np.inf)
    best = red.max()
    k = int(np.flatnonzero(red >= best - TIE_RTOL * abs(best))[0])
    return k + 1, max(float(red[k]), 0.0)


def best_split(
    dataset: Dataset,
    start: int = 0,
    stop: Optional[int] = None,
    config: GrowthConfig = GrowthConfig(),
) -> Optional[SplitCandidate]:
    """Best SSE-reducing split of ``dataset[start:stop]``.

    Candidate thresholds are midpoints between consecutive distinct ``x``
    values. Cuts leaving fewer than ``config.minbucket`` points on either
    side are skipped. Ties go to the smallest threshold. Returns ``None``
    when the range is smaller than ``config.minsplit`` or no legal cut
    exists.
    """
    start, stop = _check_range(len(dataset), start, stop)
    if stop - start < config.minsplit:
        return None
    x = dataset.x[start:stop]
    k, red = _scan(x, dataset.y[start:stop], config.minbucket)
    if k == 0:
        return None
    return SplitCandidate(
        threshold=0.5 * (x[k - 1] + x[k]),
        sse_reduction=red,
        left_count=k,
        right_count=x.size - k,
    )


@dataclass(frozen=True, eq=False)
class Tree:
    """A grown (or pruned) tree in preorder array form.

    Node ``i`` covers training rows ``start[i]:stop[i]`` of the dataset it was
    grown on. Leaves have ``left == right == -1`` and a NaN threshold;
    ``improvement`` holds the SSE reduction of each internal node's split.
    """

    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    sse: np.ndarray
    count: np.ndarray
    improvement: np.ndarray
    depth: np.ndarray
    start: np.ndarray
    stop: np.ndarray
    subtree_end: np.ndarray = field(init=False, repr=False)
    parent: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = self.left.size
        end = np.arange(1, n + 1)
        parent = np.full(n, -1)
        for i in range(n - 1, -1, -1):
            if self.left[i] >= 0:
                end[i] = end[self.right[i]]
                parent[self.left[i]] = i
                parent[self.right[i]] = i
        object.__setattr__(self, "subtree_end", end)
        object.__setattr__(self, "parent", parent)

    @property
    def node_count(self) -> int:
        return self.left.size

    @property
    def is_leaf(self) -> np.ndarray:
        return self.left < 0

    @property
    def n_leaves(self) -> int:
        return int(self.is_leaf.sum())

    @property
    def n_splits(self) -> int:
        return self.node_count - self.n_leaves

    @property
    def thresholds(self) -> np.ndarray:
        """Split thresholds of all internal nodes, in preorder."""
        return self.threshold[~self.is_leaf]

    @property
    def leaf_sse(self) -> float:
        return float(self.sse[self.is_leaf].sum())

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.is_leaf)

    def __repr__(self) -> str:
        return f"Tree(nodes={self.node_count}, leaves={self.n_leaves})"


class _Builder:
    """Accumulates preorder node arrays while a tree is grown."""

    def __init__(self, dataset: Dataset, minbucket: int) -> None:
        self.x, self.y = dataset.x, dataset.y
        self.minbucket = minbucket
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.sse: list[float] = []
        self.count: list[int] = []
        self.improvement: list[float] = []
        self.depth: list[int] = []
        self.start: list[int] = []
        self.stop: list[int] = []

    def add(self, lo: int, hi: int, d: int) -> int:
        ys = self.y[lo:hi]
        mean = float(ys.mean())
        dev = ys - mean
        self.value.append(mean)
        self.sse.append(float(dev @ dev))
        self.count.append(hi - lo)
        self.depth.append(d)
        self.start.append(lo)
        self.stop.append(hi)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.improvement.append(0.0)
        return len(self.value) - 1

    def scan(self, i: int) -> tuple[int, float]:
        lo, hi = self.start[i], self.stop[i]
        k, red = _scan(self.x[lo:hi], self.y[lo:hi], self.minbucket)
        if k:
            self.threshold[i] = 0.5 * (self.x[lo + k - 1] + self.x[lo + k])
            self.improvement[i] = red
        return k, red

    def make_leaf(self, i: int) -> None:
        """Turn node ``i`` back into a leaf, dropping its (trailing) subtree."""
        for arr in (
            self.threshold, self.left, self.right, self.value, self.sse, self.count,
            self.improvement, self.depth, self.start, self.stop,
        ):
            del arr[i + 1:]
        self.threshold[i] = np.nan
        self.left[i] = self.right[i] = -1
        self.improvement[i] = 0.0

    def build(self) -> Tree:
        return Tree(
            threshold=np.array(self.threshold, dtype=float),
            left=np.array(self.left, dtype=np.intp),
            right=np.array(self.right, dtype=np.intp),
            value=np.array(self.value, dtype=float),
            sse=np.array(self.sse, dtype=float),
            count=np.array(self.count, dtype=np.intp),
            improvement=np.array(self.improvement, dtype=float),
            depth=np.array(self.depth, dtype=np.intp),
            start=np.array(self.start, dtype=np.intp),
            stop=np.array(self.stop, dtype=np.intp),
        )


def _grow_local(b: _Builder, config: GrowthConfig, alpha: float, pure_sse: float) -> None:
    # (start, stop, depth, parent, is_left); pushing right before left keeps preorder
    stack = [(0, b.y.size, 0, -1, False)]
    while stack:
        lo, hi, d, par, is_left = stack.pop()
        i = b.add(lo, hi, d)
        if par >= 0:
            if is_left:
                b.left[par] = i
            else:
                b.right[par] = i
        if hi - lo < config.minsplit or d >= config.max_depth or b.sse[i] <= pure_sse:
            continue
        k, red = b.scan(i)
        if k == 0 or red <= 0.0 or red < alpha:
            b.threshold[i] = np.nan
            b.improvement[i] = 0.0
            continue
        stack.append((lo + k, hi, d + 1, i, False))
        stack.append((lo, lo + k, d + 1, i, True))


def _grow_subtree(
    b: _Builder, config: GrowthConfig, alpha: float, pure_sse: float,
    lo: int, hi: int, d: int, bound: float,
) -> tuple[int, int, float, float]:
    """rpart-style recursive partition of rows ``lo:hi``.

    ``bound`` caps the complexity this node can reach, as passed down from
    its parent. Returns ``(node, n_splits, subtree_sse, complexity)`` where
    the split count and SSE are those the parent should use when working
    out its own complexity.
    """
    i = b.add(lo, hi, d)
    risk = b.sse[i]
    cap = min(risk, bound)
    if hi - lo < config.minsplit or cap <= alpha or d >= config.max_depth or risk <= pure_sse:
        return i, 0, risk, alpha
    k, red = b.scan(i)
    if k == 0 or red <= 0.0:
        b.make_leaf(i)
        return i, 0, risk, alpha

    li, l_splits, l_risk, l_comp = _grow_subtree(
        b, config, alpha, pure_sse, lo, lo + k, d + 1, cap - alpha
    )
    b.left[i] = li
    cap = max((risk - l_risk) / (l_splits + 1), risk - (l_risk + b.sse[li]))
    cap = min(cap, bound)
    ri, r_splits, r_risk, r_comp = _grow_subtree(
        b, config, alpha, pure_sse, lo + k, hi, d + 1, cap - alpha
    )
    b.right[i] = ri

    comp = (risk - (l_risk + r_risk)) / (l_splits + r_splits + 1)
    # the weaker child subtree may collapse before this node does
    if r_comp > l_comp:
        if comp > l_comp:
            l_risk, l_splits = b.sse[li], 0
            comp = (risk - (l_risk + r_risk)) / (r_splits + 1)
            if comp > r_comp:
                r_risk, r_splits = b.sse[ri], 0
    elif comp > r_comp:
        r_risk, r_splits = b.sse[ri], 0
        comp = (risk - (l_risk + r_risk)) / (l_splits + 1)
        if comp > l_comp:
            l_risk, l_splits = b.sse[li], 0
    comp = (risk - (l_risk + r_risk)) / (l_splits + r_splits + 1)

    if comp <= alpha:
        b.make_leaf(i)
        return i, 0, risk, comp
    return i, l_splits + r_splits + 1, l_risk + r_risk, comp


def grow(dataset: Dataset, config: GrowthConfig = GrowthConfig(), alpha: Optional[float] = None) -> Tree:
    """Grow the unpruned tree by recursive binary splitting.

    A node is only split when it holds at least ``minsplit`` points and lies
    above ``max_depth``. Which splits survive is governed by
    ``config.cp_rule`` against the absolute threshold ``alpha``, which
    defaults to ``cp`` times the root SSE.
    """
    if len(dataset) < 1:
        raise ValueError("cannot grow a tree on an empty dataset")
    b = _Builder(dataset, config.minbucket)
    root_sse = _sse(dataset.y)
    if alpha is None:
        alpha = config.cp * root_sse
    # nodes this close to pure only carry rounding noise
    pure_sse = 1e-12 * root_sse
    if config.cp_rule == "local":
        _grow_local(b, config, alpha, pure_sse)
    else:
        _grow_subtree(b, config, alpha, pure_sse, 0, len(dataset), 0, root_sse)
    return b.build()


def apply(tree: Tree, x_query, node_alpha: Optional[np.ndarray] = None, alpha: float = 0.0) -> np.ndarray:
    """Index of the leaf reached by each query point.

    Queries go left iff ``x < threshold``. When ``node_alpha`` is given, any
    node whose collapse level is ``<= alpha`` is treated as a leaf, which
    routes through the cost-complexity subtree at ``alpha`` without
    rebuilding it.
    """
    xq = np.atleast_1d(np.asarray(x_query, dtype=float))
    internal = ~tree.is_leaf
    if node_alpha is not None:
        internal = internal & (node_alpha > alpha)
    node = np.zeros(xq.size, dtype=np.intp)
    active = np.flatnonzero(internal[node])
    while active.size:
        cur = node[active]
        go_left = xq[active] < tree.threshold[cur]
        node[active] = np.where(go_left, tree.left[cur], tree.right[cur])
        active = active[internal[node[active]]]
    return node


def predict(tree: Tree, x_query):
    """Leaf mean for each query; returns a float for scalar input."""
    out = tree.value[apply(tree, x_query)]
    if np.ndim(x_query) == 0:
        return float(out[0])
    return out


def leaf_intervals(tree: Tree) -> list[tuple[float, float]]:
    """``(low, high)`` bounds of every leaf region, ordered left to right."""
    out = []

    def walk(i: int, lo: float, hi: float) -> None:
        if tree.left[i] < 0:
            out.append((lo, hi))
            return
        t = float(tree.threshold[i])
        walk(int(tree.left[i]), lo, t)
        walk(int(tree.right[i]), t, hi)

    walk(0, -np.inf, np.inf)
    return out


def format_tree(tree: Tree) -> str:
    """Indented text rendering, one node per line."""
    lines = []
    for i in range(tree.node_count):
        pad = "  " * int(tree.depth[i])
        head = f"{pad}node {i}: n={tree.count[i]} mean={tree.value[i]:.6g} sse={tree.sse[i]:.6g}"
        if tree.left[i] >= 0:
            head += f" split x < {tree.threshold[i]:.6g} (gain {tree.improvement[i]:.6g})"
        else:
            head += " *"
        lines.append(head)
    return "\n".join(lines)


def tree_to_dict(tree: Tree) -> dict:
    def node(i: int) -> dict:
        d = {
            "count": int(tree.count[i]),
            "mean": float(tree.value[i]),
            "sse": float(tree.sse[i]),
        }
        if tree.left[i] >= 0:
            d["threshold"] = float(tree.threshold[i])
            d["improvement"] = float(tree.improvement[i])
            d["left"] = node(int(tree.left[i]))
            d["right"] = node(int(tree.right[i]))
        return d

    return node(0)
