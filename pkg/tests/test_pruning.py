import numpy as np
import pytest

from hetcart.errors import InvalidStateError
from hetcart.pruning import (
    CpPath,
    PruneConfig,
    Rule,
    cp_sequence,
    cross_validate,
    evaluation_alphas,
    fit,
    fold_assignment,
    predict_along_path,
    select_row,
    select_subtree,
)
from hetcart.tree import Dataset, GrowthConfig, apply, grow, predict

from oracles import brute_force_optimal, internal_nodes_at, subtrees


def ds(x, y):
    return Dataset(np.asarray(x, float), np.asarray(y, float))


def small_tree(seed, max_leaves=10):
    """A random grown tree with at most ``max_leaves`` leaves."""
    rng = np.random.default_rng(seed)
    while True:
        n = int(rng.integers(30, 90))
        x = np.arange(n, dtype=float)
        jumps = rng.normal(size=int(rng.integers(0, 5))) * rng.uniform(0.5, 4)
        cuts = np.sort(rng.integers(0, n, size=jumps.size))
        mu = sum(j * (x >= c) for j, c in zip(jumps, cuts)) if jumps.size else np.zeros(n)
        y = mu + rng.normal(size=n) * rng.uniform(0.2, 2)
        tree = grow(ds(x, y), GrowthConfig(cp=0.0, minbucket=int(rng.integers(4, 10)), minsplit=10))
        if 2 <= tree.n_leaves <= max_leaves:
            return tree


class TestCpSequence:
    def test_root_only(self):
        t = grow(ds(range(10), np.zeros(10)))
        path = cp_sequence(t)
        assert len(path) == 1
        assert path.rows[0][:2] == (0.0, 1)

    def test_single_split_collapses_at_its_gain(self):
        t = grow(ds([1, 2, 3, 4], [0, 0, 10, 10]), GrowthConfig(cp=0, minbucket=1, minsplit=2))
        path = cp_sequence(t)
        assert path.n_leaves.tolist() == [2, 1]
        assert path.alpha[1] == pytest.approx(100.0)
        assert path.train_sse.tolist() == pytest.approx([0.0, 100.0])

    def test_weaker_deep_split_goes_first(self):
        # root split gains ~100-ish; the split inside the right child gains 1
        x = np.arange(1, 13, dtype=float)
        y = np.array([0, 0, 0, 0, 10, 10, 10, 10, 11, 11, 11, 11], dtype=float)
        t = grow(ds(x, y), GrowthConfig(cp=0, minbucket=2, minsplit=2))
        assert t.n_leaves == 3
        path = cp_sequence(t)
        assert path.n_leaves.tolist() == [3, 2, 1]
        # g(deep) = 8 * 0.25 = 2 by hand: SSE of 8 points {10 x4, 11 x4} is 2, children pure
        assert path.alpha[1] == pytest.approx(2.0)
        deep = int(np.flatnonzero(~t.is_leaf)[1])
        assert path.node_alpha[deep] == pytest.approx(2.0)
        # root: (SSE(root) - 2) / 1
        assert path.alpha[2] == pytest.approx(t.sse[0] - 2.0)
        assert t.threshold[0] == 4.5

    def test_simultaneous_minima_collapse_together(self):
        # two mirror-image child splits with identical gains
        y = np.array([0, 0, 1, 1, 10, 10, 11, 11], dtype=float)
        t = grow(ds(range(8), y), GrowthConfig(cp=0, minbucket=2, minsplit=2))
        assert t.n_leaves == 4
        path = cp_sequence(t)
        assert path.n_leaves.tolist() == [4, 2, 1]

    @pytest.mark.parametrize("seed", range(30))
    def test_path_invariants(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(20, 200))
        y = rng.normal(size=n) + (np.arange(n) > n // 3) * rng.normal() * 3
        t = grow(ds(range(n), y), GrowthConfig(cp=0.0, minbucket=3, minsplit=7))
        path = cp_sequence(t)
        assert path.alpha[0] == 0.0
        assert np.all(np.diff(path.alpha) > 0)
        assert np.all(np.diff(path.n_leaves) < 0)
        assert path.n_leaves[-1] == 1
        assert np.all(np.diff(path.train_sse) >= -1e-9 * t.sse[0])
        # nestedness: each subtree's internal set contains the next one's
        sets = [internal_nodes_at(path, a) for a in path.alpha]
        for a, b in zip(sets, sets[1:]):
            assert b < a
        # rows and subtrees agree
        for k, a in enumerate(path.alpha):
            sub = path.subtree(a)
            assert sub.n_leaves == path.n_leaves[k]
            assert sub.leaf_sse == pytest.approx(path.train_sse[k], rel=1e-9, abs=1e-9)
            assert path.row_at(a) == k
            if k + 1 < len(path):
                mid = 0.5 * (a + path.alpha[k + 1])
                assert path.row_at(mid) == k
                assert path.subtree(mid).n_leaves == path.n_leaves[k]

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_brute_force_optimum(self, seed):
        tree = small_tree(seed)
        path = cp_sequence(tree)
        cands = subtrees(tree)
        probes = list(path.alpha[1:]) + [0.5 * (a + b) for a, b in zip(path.alpha, path.alpha[1:])]
        probes.append(path.alpha[-1] * 2 + 1)
        for a in probes:
            assert internal_nodes_at(path, a) == brute_force_optimal(tree, a, cands)


class TestPruneAndPredict:
    def test_prune_compacts_and_predicts_like_routing(self):
        rng = np.random.default_rng(5)
        x = np.arange(300, dtype=float)
        y = np.ceil((x + 1) / 60) + rng.normal(size=300) * 0.7
        t = grow(ds(x, y), GrowthConfig(cp=0.0))
        path = cp_sequence(t)
        q = np.linspace(-5, 305, 97)
        alphas = np.concatenate([[0.0], path.alpha, [np.inf]])
        table = predict_along_path(path, q, alphas)
        for j, a in enumerate(alphas):
            sub = path.subtree(a)
            assert np.array_equal(predict(sub, q), table[:, j])
            assert np.array_equal(t.value[apply(t, q, path.node_alpha, a)], table[:, j])
        assert np.all(table[:, -1] == t.value[0])
        assert np.array_equal(table[:, 0], predict(t, q))

    def test_pruned_tree_is_well_formed(self):
        rng = np.random.default_rng(8)
        t = grow(ds(range(200), rng.normal(size=200)), GrowthConfig(cp=0.0))
        path = cp_sequence(t)
        sub = path.subtree(path.alpha[len(path) // 2])
        internal = np.flatnonzero(~sub.is_leaf)
        for i in internal:
            assert sub.left[i] > i and sub.right[i] > i
            assert sub.count[sub.left[i]] + sub.count[sub.right[i]] == sub.count[i]
        assert np.all(np.isnan(sub.threshold[sub.is_leaf]))


class TestCrossValidate:
    def test_fold_assignment(self):
        f = fold_assignment(23, 5, 1)
        assert sorted(np.bincount(f).tolist()) == [4, 4, 5, 5, 5]
        assert np.array_equal(f, fold_assignment(23, 5, 1))
        assert not np.array_equal(f, fold_assignment(23, 5, 2))
        with pytest.raises(ValueError):
            fold_assignment(3, 5, 0)

    def test_too_many_folds(self):
        with pytest.raises(ValueError):
            cross_validate(ds(range(5), range(5)), GrowthConfig(), PruneConfig(n_folds=6))

    def test_evaluation_alphas(self):
        t = grow(ds([1, 2, 3, 4], [0, 0, 10, 10]), GrowthConfig(cp=0, minbucket=1, minsplit=2))
        path = cp_sequence(t)
        ev = evaluation_alphas(path, floor=4.0)
        assert ev[0] == pytest.approx(np.sqrt(4.0 * 100.0))
        assert ev[-1] == np.inf

    @pytest.mark.parametrize("rule", ["local", "subtree"])
    def test_noiseless_step_keeps_every_retained_jump(self, rule):
        x = np.arange(1, 1001, dtype=float)
        d = ds(x, np.ceil(x / 100))
        for cp in (0.01, 1e-6):
            growth = GrowthConfig(cp=cp, cp_rule=rule)
            path = cross_validate(d, growth, PruneConfig(fold_seed=3))
            k = select_row(path, Rule.MIN_CV)
            assert k == 0  # the full tree: every split in it sits on a jump
            assert np.all(np.diff(path.cv_error[: len(path)]) > 0)
            _, tree = select_subtree(path)
            assert all(t % 100 == 0.5 for t in tree.thresholds)
        assert tree.n_splits == 9

    def test_leave_one_out_smoke(self):
        rng = np.random.default_rng(2)
        d = ds(range(10), np.r_[np.zeros(5), np.ones(5) * 5] + rng.normal(size=10) * 0.1)
        path = cross_validate(d, GrowthConfig(minbucket=2, minsplit=4), PruneConfig(n_folds=10))
        assert path.has_cv
        assert np.all(np.isfinite(path.cv_error)) and np.all(np.isfinite(path.cv_se))
        assert path.n_leaves[-1] == 1

    def test_determinism(self):
        rng = np.random.default_rng(4)
        d = ds(range(400), rng.normal(size=400) * np.r_[np.ones(200), 5 * np.ones(200)])
        a = fit(d, GrowthConfig(cp=0.001), PruneConfig(fold_seed=9))
        b = fit(d, GrowthConfig(cp=0.001), PruneConfig(fold_seed=9))
        assert a.alpha == b.alpha
        assert np.array_equal(a.path.cv_error, b.path.cv_error)
        assert a.tree.thresholds.tolist() == b.tree.thresholds.tolist()


def fake_path(cv, se):
    t = grow(ds(range(8), [0, 0, 1, 1, 10, 10, 13, 13]), GrowthConfig(cp=0, minbucket=1, minsplit=2))
    path = cp_sequence(t)
    k = len(cv)
    return CpPath(
        tree=t,
        node_alpha=path.node_alpha,
        alpha=np.arange(k, dtype=float),
        n_leaves=np.arange(k, 0, -1),
        train_sse=np.zeros(k),
        cv_error=np.array(cv, dtype=float),
        cv_se=np.array(se, dtype=float),
    )


class TestSelect:
    def test_requires_cv(self):
        t = grow(ds(range(4), [0, 0, 1, 1]))
        with pytest.raises(InvalidStateError):
            select_subtree(cp_sequence(t))

    def test_monotone_picks_largest_tree(self):
        # rows run from the largest tree down to the root
        p = fake_path([1.0, 2.0, 3.0, 4.0], [0.1] * 4)
        assert select_row(p, "min_cv") == 0

    def test_one_se_example(self):
        # smallest tree first: 10 (root), 9, then 9.5 for the next size down
        p = fake_path([9.5, 9.0, 10.0][::-1], [0.6, 0.6, 0.6])
        # reversed so rows go largest -> smallest: [10, 9, 9.5]
        assert p.cv_error.tolist() == [10.0, 9.0, 9.5]
        assert select_row(p, Rule.MIN_CV) == 1
        assert select_row(p, Rule.ONE_SE) == 2

    def test_one_se_uses_se_of_minimising_row(self):
        p = fake_path([9.0, 9.5, 10.0], [0.1, 0.2, 5.0])
        assert select_row(p, Rule.ONE_SE) == 0

    def test_tie_prefers_smaller_tree(self):
        p = fake_path([5.0, 3.0, 3.0, 4.0], [0.0] * 4)
        assert select_row(p, "min_cv") == 2

    def test_rule_aliases(self):
        assert Rule.parse("min") is Rule.MIN_CV
        assert Rule.parse("1se") is Rule.ONE_SE
        assert PruneConfig(rule="one_se").rule is Rule.ONE_SE
        with pytest.raises(ValueError):
            Rule.parse("best")
