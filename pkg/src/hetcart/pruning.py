"""Weakest-link cost-complexity pruning and cross-validated subtree choice."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InvalidStateError
from .tree import Dataset, GrowthConfig, Tree, grow

# Weakest-link values this close to the current minimum collapse together.
_ALPHA_RTOL = 1e-10


class Rule(str, enum.Enum):
    MIN_CV = "min_cv"
    ONE_SE = "one_se"

    @classmethod
    def parse(cls, value) -> "Rule":
        if isinstance(value, cls):
            return value
        aliases = {"min": cls.MIN_CV, "1se": cls.ONE_SE}
        return aliases.get(value) or cls(value)


@dataclass(frozen=True)
class PruneConfig:
    n_folds: int = 10
    rule: Rule = Rule.MIN_CV
    fold_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_folds < 2:
            raise ValueError(f"n_folds must be >= 2, got {self.n_folds}")
        object.__setattr__(self, "rule", Rule.parse(self.rule))


@dataclass(frozen=True, eq=False)
class CpPath:
    """Nested subtree sequence of a tree, ordered from the full tree to the root.

    Row ``k`` is the optimal subtree for every ``alpha`` in
    ``[alpha[k], alpha[k+1])``. ``node_alpha[i]`` is the level at which node
    ``i`` of ``tree`` stops being internal (0 for leaves of the full tree).
    """

    tree: Tree
    node_alpha: np.ndarray
    alpha: np.ndarray
    n_leaves: np.ndarray
    train_sse: np.ndarray
    cv_error: Optional[np.ndarray] = None
    cv_se: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.alpha.size

    @property
    def has_cv(self) -> bool:
        return self.cv_error is not None and self.cv_se is not None

    @property
    def rows(self) -> list[tuple]:
        cv = self.cv_error if self.has_cv else [None] * len(self)
        se = self.cv_se if self.has_cv else [None] * len(self)
        return [
            (float(a), int(k), float(r), None if e is None else float(e), None if s is None else float(s))
            for a, k, r, e, s in zip(self.alpha, self.n_leaves, self.train_sse, cv, se)
        ]

    def row_at(self, alpha: float) -> int:
        if alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {alpha}")
        return int(np.searchsorted(self.alpha, alpha, side="right")) - 1

    def subtree(self, alpha: float) -> Tree:
        return prune(self.tree, self.node_alpha, alpha)


def cp_sequence(tree: Tree) -> CpPath:
    """Weakest-link pruning path of ``tree``.

    Repeatedly collapses the internal node(s) minimising
    ``(SSE(t) - SSE(subtree at t)) / (leaves(t) - 1)`` and records that
    minimum as the next critical alpha. Collapsing a node only changes the
    subtree totals of its ancestors, so each step costs one vectorised
    minimum plus a walk up the tree.
    """
    n = tree.node_count
    internal = ~tree.is_leaf
    left, right = tree.left, tree.right
    node_sse = tree.sse
    sub_sse = np.where(internal, 0.0, node_sse)
    leaves = np.where(internal, 0, 1).astype(float)
    for i in range(n - 1, -1, -1):
        if internal[i]:
            sub_sse[i] = sub_sse[left[i]] + sub_sse[right[i]]
            leaves[i] = leaves[left[i]] + leaves[right[i]]

    g = np.full(n, np.inf)
    g[internal] = (node_sse[internal] - sub_sse[internal]) / (leaves[internal] - 1)
    node_alpha = np.where(internal, np.inf, 0.0)
    end, parent = tree.subtree_end, tree.parent

    alphas, sizes, errs = [0.0], [int(leaves[0])], [float(sub_sse[0])]
    while internal[0] and np.isfinite(g[0]):
        a = max(float(g.min()), 0.0)
        limit = a + _ALPHA_RTOL * a
        while True:
            hits = np.flatnonzero(g <= limit)
            if hits.size == 0:
                break
            for t in hits:  # ascending index = ancestors first
                if not np.isfinite(g[t]):
                    continue
                block = slice(t, end[t])
                np.minimum(node_alpha[block], a, out=node_alpha[block])
                g[block] = np.inf
                d_sse = node_sse[t] - sub_sse[t]
                d_leaves = leaves[t] - 1
                sub_sse[t] = node_sse[t]
                leaves[t] = 1
                p = parent[t]
                while p >= 0:
                    sub_sse[p] += d_sse
                    leaves[p] -= d_leaves
                    g[p] = (node_sse[p] - sub_sse[p]) / (leaves[p] - 1)
                    p = parent[p]
        if a <= alphas[-1]:
            alphas.pop()
            sizes.pop()
            errs.pop()
        alphas.append(a)
        sizes.append(int(leaves[0]))
        errs.append(float(sub_sse[0]))

    return CpPath(
        tree=tree,
        node_alpha=node_alpha,
        alpha=np.array(alphas),
        n_leaves=np.array(sizes, dtype=np.intp),
        train_sse=np.array(errs),
    )


def prune(tree: Tree, node_alpha: np.ndarray, alpha: float) -> Tree:
    """Compact copy of the subtree in which nodes with ``node_alpha <= alpha`` are leaves."""
    collapsed = ~tree.is_leaf & (node_alpha <= alpha)
    keep = np.ones(tree.node_count, dtype=bool)
    for t in np.flatnonzero(collapsed):
        if keep[t]:
            keep[t + 1 : tree.subtree_end[t]] = False
    old = np.flatnonzero(keep)
    new_index = np.full(tree.node_count, -1, dtype=np.intp)
    new_index[old] = np.arange(old.size)
    is_leaf = tree.is_leaf[old] | collapsed[old]

    def remap(child: np.ndarray) -> np.ndarray:
        return np.where(is_leaf, -1, new_index[np.where(is_leaf, 0, child[old])])

    return Tree(
        threshold=np.where(is_leaf, np.nan, tree.threshold[old]),
        left=remap(tree.left),
        right=remap(tree.right),
        value=tree.value[old].copy(),
        sse=tree.sse[old].copy(),
        count=tree.count[old].copy(),
        improvement=np.where(is_leaf, 0.0, tree.improvement[old]),
        depth=tree.depth[old].copy(),
        start=tree.start[old].copy(),
        stop=tree.stop[old].copy(),
    )


def _root_paths(tree: Tree, x: np.ndarray) -> np.ndarray:
    """Node index at each depth along the root-to-leaf path of every query.

    Paths shorter than the deepest one are padded by repeating their leaf.
    """
    internal = ~tree.is_leaf
    node = np.zeros(x.size, dtype=np.intp)
    cols = [node]
    while internal[node].any():
        go = internal[node]
        nxt = node.copy()
        cur = node[go]
        nxt[go] = np.where(x[go] < tree.threshold[cur], tree.left[cur], tree.right[cur])
        node = nxt
        cols.append(node)
    return np.stack(cols, axis=1)


def predict_along_path(path: CpPath, x, alphas) -> np.ndarray:
    """Predictions of the subtrees at each of ``alphas`` for every query.

    Returns an array of shape ``(len(x), len(alphas))``. Collapse levels
    never increase going down a root-to-leaf path, so the node a query stops
    at for a given alpha is found by counting the path nodes still internal.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    nodes = _root_paths(path.tree, x)
    level = path.node_alpha[nodes]
    depth = (level[:, :, None] > alphas[None, None, :]).sum(axis=1)
    depth = np.minimum(depth, nodes.shape[1] - 1)
    stop = np.take_along_axis(nodes, depth, axis=1)
    return path.tree.value[stop]


def fold_assignment(n: int, n_folds: int, fold_seed: int) -> np.ndarray:
    """Fold label of each point: a uniform shuffle dealt round-robin."""
    if n_folds > n:
        raise ValueError(f"n_folds={n_folds} exceeds dataset size {n}")
    perm = np.random.default_rng(fold_seed).permutation(n)
    folds = np.empty(n, dtype=np.intp)
    folds[perm] = np.arange(n) % n_folds
    return folds


def evaluation_alphas(path: CpPath, floor: float = 0.0) -> np.ndarray:
    """Alpha at which each row is scored in cross-validation.

    Geometric mean of the row's alpha and the next one; the first row uses
    ``floor`` (the growth threshold) in place of its zero alpha, and the
    root row is scored at infinity.
    """
    a = path.alpha
    lo = a[:-1].copy()
    if lo.size and lo[0] <= 0.0:
        lo[0] = floor
    mid = np.sqrt(lo * a[1:])
    return np.append(mid, np.inf)


def cross_validate(
    dataset: Dataset,
    growth: GrowthConfig = GrowthConfig(),
    prune_cfg: PruneConfig = PruneConfig(),
    full_path: Optional[CpPath] = None,
) -> CpPath:
    """Grow, build the pruning path and fill in k-fold CV error per row.

    ``cv_error`` is the mean held-out squared error per point; ``cv_se``
    is the standard error of the per-fold mean errors. Fold trees are grown
    with ``growth`` on the complement of each fold and scored at the main
    path's evaluation alphas; both the fold growth threshold and the
    evaluation alphas are the full-data values rescaled by the fraction of
    points used for training.
    """
    n = len(dataset)
    if prune_cfg.n_folds > n:
        raise ValueError(f"n_folds={prune_cfg.n_folds} exceeds dataset size {n}")
    if full_path is None:
        full_path = cp_sequence(grow(dataset, growth))
    root_sse = float(full_path.tree.sse[0])
    eval_alpha = evaluation_alphas(full_path, growth.cp * root_sse)

    folds = fold_assignment(n, prune_cfg.n_folds, prune_cfg.fold_seed)
    sq_err = np.zeros(len(full_path))
    fold_err = np.zeros((prune_cfg.n_folds, len(full_path)))
    for f in range(prune_cfg.n_folds):
        held = folds == f
        train = Dataset(dataset.x[~held], dataset.y[~held])
        scale = len(train) / n
        fold_path = cp_sequence(grow(train, growth, alpha=growth.cp * root_sse * scale))
        pred = predict_along_path(fold_path, dataset.x[held], eval_alpha * scale)
        err = ((pred - dataset.y[held][:, None]) ** 2).sum(axis=0)
        sq_err += err
        fold_err[f] = err / held.sum()

    cv_error = sq_err / n
    cv_se = fold_err.std(axis=0, ddof=1) / np.sqrt(prune_cfg.n_folds)
    return replace(full_path, cv_error=cv_error, cv_se=cv_se)


def select_row(path: CpPath, rule=Rule.MIN_CV) -> int:
    if not path.has_cv:
        raise InvalidStateError("pruning path has no cross-validation columns")
    rule = Rule.parse(rule)
    err = path.cv_error
    best = float(err.min())
    ties = np.flatnonzero(err <= best + 1e-12 * abs(best))
    k_min = int(ties[-1])  # rows run from largest to smallest tree
    if rule is Rule.MIN_CV:
        return k_min
    limit = best + float(path.cv_se[k_min])
    return int(np.flatnonzero(err <= limit)[-1])


def select_subtree(path: CpPath, rule=Rule.MIN_CV) -> tuple[float, Tree]:
    """Alpha of the chosen row and the corresponding pruned tree.

    ``min_cv`` takes the row with the lowest CV error, preferring the
    smaller tree on ties. ``one_se`` takes the smallest tree whose CV error
    is within one standard error (of the minimising row) of the minimum.
    """
    k = select_row(path, rule)
    alpha = float(path.alpha[k])
    return alpha, path.subtree(alpha)


@dataclass(frozen=True, eq=False)
class PrunedFit:
    path: CpPath
    row: int
    alpha: float
    tree: Tree

    @property
    def full_tree(self) -> Tree:
        return self.path.tree


def fit(
    dataset: Dataset,
    growth: GrowthConfig = GrowthConfig(),
    prune_cfg: PruneConfig = PruneConfig(),
) -> PrunedFit:
    """Grow, cross-validate and prune in one call."""
    path = cp_sequence(grow(dataset, growth))
    if len(path) == 1:
        # nothing to choose between; skip the fold fits
        return PrunedFit(path=path, row=0, alpha=0.0, tree=path.tree)
    path = cross_validate(dataset, growth, prune_cfg, full_path=path)
    k = select_row(path, prune_cfg.rule)
    alpha = float(path.alpha[k])
    return PrunedFit(path=path, row=k, alpha=alpha, tree=path.subtree(alpha))
