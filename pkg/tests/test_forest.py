"""Random-forest regressor: reference-tree equality, determinism, model file
round-trips, and the decision threshold."""

import numpy as np
import pytest

from _cart_oracle import build_oracle_tree, oracle_predict
from lmtune.errors import ModelFormatError
from lmtune.forest import (
    Forest,
    Hyperparams,
    load,
    decide,
    predict,
    save,
    speedup_to_target,
    train_arrays,
)


def dataset(seed, n, d, coarse=True):
    """Integer-ish grids provoke duplicate values and split ties."""
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, size=(n, d)).astype(np.float64) if coarse else rng.normal(size=(n, d))
    y = X[:, 0] * 1.5 - X[:, d - 1] + rng.integers(0, 3, size=n)
    X[rng.integers(0, n, n // 4)] = X[0]  # inject exact duplicate rows
    return X, y.astype(np.float64)


def single_tree(X, y, **kw):
    hp = Hyperparams(num_trees=1, features_per_node=X.shape[1], bootstrap=False, **kw)
    return train_arrays(X, y, hp)


class TestSingleTreeMatchesReference:
    def test_exact_equality_on_mixed_datasets(self):
        for seed in (1, 2, 3, 4, 5):
            X, y = dataset(seed, n=40 + 30 * seed, d=2 + seed % 4, coarse=seed % 2 == 0)
            f = single_tree(X, y)
            got = f.trees[0].predict(X)  # leaf values, before the 2**x map
            want = oracle_predict(build_oracle_tree(X, y), X)
            assert np.array_equal(got, want), f"seed {seed}"

    def test_pure_leaves_reproduce_targets(self):
        rng = np.random.default_rng(9)
        X = rng.permutation(30).reshape(30, 1).astype(np.float64)
        y = rng.normal(size=30)
        f = single_tree(X, y)
        assert np.array_equal(f.trees[0].predict(X), y)


class TestDeterminism:
    def test_same_seed_same_model(self, tmp_path):
        X, y = dataset(7, 120, 5)
        hp = Hyperparams(num_trees=8, features_per_node=2, seed=13)
        f1, f2 = train_arrays(X, y, hp), train_arrays(X, y, hp)
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        save(f1, p1)
        save(f2, p2)
        assert p1.read_text() == p2.read_text()

    def test_threads_do_not_change_the_model(self, tmp_path):
        X, y = dataset(8, 200, 6)
        hp = Hyperparams(num_trees=8, features_per_node=3, seed=5)
        f1 = train_arrays(X, y, hp, threads=1)
        f4 = train_arrays(X, y, hp, threads=4)
        assert np.array_equal(predict(f1, X), predict(f4, X))
        p1, p4 = tmp_path / "t1.txt", tmp_path / "t4.txt"
        save(f1, p1)
        save(f4, p4)
        assert p1.read_text() == p4.read_text()

    def test_different_seeds_differ(self):
        X, y = dataset(7, 120, 5)
        f1 = train_arrays(X, y, Hyperparams(num_trees=4, seed=0))
        f2 = train_arrays(X, y, Hyperparams(num_trees=4, seed=1))
        assert not np.array_equal(predict(f1, X), predict(f2, X))


class TestPrediction:
    def test_two_to_the_mean(self):
        f = single_tree(np.array([[0.0], [1.0]]), np.array([0.0, 4.0]))
        assert predict(f, np.array([0.0])) == 1.0
        assert predict(f, np.array([1.0])) == 16.0
        assert predict(f, np.array([0.49])) == 1.0  # <= 0.5 goes left

    def test_constant_target_forest(self):
        X, _ = dataset(3, 50, 4)
        f = train_arrays(X, np.full(50, 3.0), Hyperparams(num_trees=5, seed=2))
        assert np.all(predict(f, X) == 8.0)

    def test_decide_strictly_above_one(self):
        X, _ = dataset(3, 50, 4)
        even = train_arrays(X, np.zeros(50), Hyperparams(num_trees=3, seed=0))
        assert predict(even, X[0]) == 1.0
        assert decide(even, X[0]) is False
        up = train_arrays(X, np.full(50, 0.1), Hyperparams(num_trees=3, seed=0))
        assert decide(up, X[0]) is True

    def test_vectorized_matches_scalar(self):
        X, y = dataset(4, 80, 3)
        f = train_arrays(X, y, Hyperparams(num_trees=6, seed=11))
        batch = predict(f, X[:10])
        assert list(batch) == [predict(f, X[i]) for i in range(10)]

    def test_feature_width_checked(self):
        X, y = dataset(4, 30, 3)
        f = train_arrays(X, y, Hyperparams(num_trees=2))
        with pytest.raises(ValueError, match="feature count"):
            predict(f, np.zeros(5))

    def test_bounded_by_training_targets(self):
        # every leaf is a mean of targets, so 2**prediction stays inside
        # [2**min(y), 2**max(y)] for any query point
        X, y = dataset(12, 100, 4)
        f = train_arrays(X, y, Hyperparams(num_trees=10, seed=4))
        q = np.random.default_rng(0).normal(0, 10, size=(500, 4))
        p = predict(f, q)
        assert np.all(p >= 2.0 ** y.min()) and np.all(p <= 2.0 ** y.max())

    def test_invariant_under_tree_order(self):
        # up to float summation order; the decision threshold is unaffected
        X, y = dataset(13, 90, 4)
        f = train_arrays(X, y, Hyperparams(num_trees=6, seed=7))
        g = Forest(f.hyperparams, f.feature_names, list(reversed(f.trees)))
        assert predict(f, X) == pytest.approx(predict(g, X), rel=1e-12)


class TestStoppingRules:
    def test_max_depth_zero_is_one_leaf(self):
        X, y = dataset(5, 60, 3)
        f = single_tree(X, y, max_depth=0)
        t = f.trees[0]
        assert len(t.feature) == 1 and t.feature[0] == -1
        assert predict(f, X[0]) == 2.0 ** y.mean()

    def test_min_samples_leaf_bounds_leaf_sizes(self):
        X, y = dataset(6, 64, 3)
        f = single_tree(X, y, min_samples_leaf=8)
        t = f.trees[0]
        # count rows reaching each leaf
        leaf_of = {}
        for i, x in enumerate(X):
            node = 0
            while t.feature[node] >= 0:
                node = t.left[node] if x[t.feature[node]] <= t.threshold[node] else t.right[node]
            leaf_of.setdefault(node, 0)
            leaf_of[node] += 1
        assert min(leaf_of.values()) >= 8

    def test_bootstrap_leaves_out_of_bag_rows(self):
        X, y = dataset(2, 100, 4)
        f = train_arrays(X, y, Hyperparams(num_trees=10, seed=3))
        oob_sizes = [len(t.oob_indices) for t in f.trees]
        assert all(s > 0 for s in oob_sizes)
        assert np.mean(oob_sizes) == pytest.approx(100 * np.exp(-1), rel=0.25)


class TestTargetTransform:
    def test_log2_with_floor(self):
        assert speedup_to_target(1.0) == 0.0
        assert speedup_to_target(8.0) == 3.0
        assert speedup_to_target(0.5) == -1.0
        assert speedup_to_target(0.0) == -10.0


class TestModelFile:
    def test_round_trip_is_exact(self, tmp_path):
        X, y = dataset(10, 150, 5)
        f = train_arrays(X, y, Hyperparams(num_trees=7, features_per_node=3, seed=21))
        path = tmp_path / "model.txt"
        save(f, path)
        g = load(path)
        assert g.hyperparams == f.hyperparams
        assert g.feature_names == f.feature_names
        assert np.array_equal(predict(g, X), predict(f, X))
        assert path.read_text().startswith("lmforest 1\n")

    def test_save_is_stable_through_reload(self, tmp_path):
        X, y = dataset(10, 80, 4)
        f = train_arrays(X, y, Hyperparams(num_trees=3, seed=2))
        p1, p2 = tmp_path / "m1.txt", tmp_path / "m2.txt"
        save(f, p1)
        save(load(p1), p2)
        assert p1.read_text() == p2.read_text()

    def test_malformed_inputs_name_the_line(self, tmp_path):
        X, y = dataset(1, 20, 2)
        f = train_arrays(X, y, Hyperparams(num_trees=1, seed=0))
        path = tmp_path / "model.txt"
        save(f, path)
        good = path.read_text().splitlines()

        bad = tmp_path / "bad.txt"
        bad.write_text("not-a-model 9\n")
        with pytest.raises(ModelFormatError, match="line 1"):
            load(bad)

        bad.write_text("\n".join(good[:4]) + "\n")
        with pytest.raises(ModelFormatError, match="unexpected end of file"):
            load(bad)

        lines = list(good)
        lines[1] = "num_trees many"
        bad.write_text("\n".join(lines) + "\n")
        with pytest.raises(ModelFormatError, match="line 2"):
            load(bad)

        lines = list(good)
        lines[8] = "feature_names a,b,c"  # header claims 2 features
        bad.write_text("\n".join(lines) + "\n")
        with pytest.raises(ModelFormatError, match="line 9"):
            load(bad)

    def test_out_of_range_feature_index_rejected(self, tmp_path):
        X, y = dataset(1, 40, 2)
        f = train_arrays(X, y, Hyperparams(num_trees=1, seed=0))
        path = tmp_path / "model.txt"
        save(f, path)
        text = path.read_text()
        assert "node 0 " in text or "node 1 " in text
        first_node = next(l for l in text.splitlines() if l.startswith("node "))
        mutated = text.replace(first_node, "node 2" + first_node[len("node 0"):], 1)
        bad = tmp_path / "bad.txt"
        bad.write_text(mutated)
        with pytest.raises(ModelFormatError, match="feature index 2 out of range"):
            load(bad)

    def test_zero_trees_rejected(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text(
            "lmforest 1\nnum_trees 0\nfeatures_per_node 4\nmax_depth none\n"
            "min_samples_leaf 1\nbootstrap true\nseed 0\nnum_features 1\n"
            "feature_names a\nend\n"
        )
        with pytest.raises(ModelFormatError, match="num_trees 0 < 1"):
            load(bad)


def oob_error(f, X, y):
    """Aggregated out-of-bag squared error on the log2 targets."""
    total = np.zeros(len(X))
    hits = np.zeros(len(X))
    for t in f.trees:
        p = t.predict(X[t.oob_indices])
        total[t.oob_indices] += p
        hits[t.oob_indices] += 1
    seen = hits > 0
    return float(np.mean((total[seen] / hits[seen] - y[seen]) ** 2))


def test_out_of_bag_error_shrinks_with_forest_size(default_dataset):
    rows = default_dataset[:4000]
    X = np.stack([r.features.to_array() for r in rows])
    y = np.array([speedup_to_target(r.speedup) for r in rows])
    worse = better = 0.0
    for seed in range(5):
        e1 = oob_error(train_arrays(X, y, Hyperparams(num_trees=1, seed=seed)), X, y)
        e20 = oob_error(train_arrays(X, y, Hyperparams(num_trees=20, seed=seed)), X, y)
        worse += e1
        better += e20
    assert better < worse
