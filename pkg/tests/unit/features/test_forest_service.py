import numpy as np
import pytest

from windcast.models.mod_features import ForestConfig
from windcast.services.svc_features import FeatureService
from windcast.services.svc_forest import ForestService
from windcast.validators.val_errors import DataError


def brute_force_root_gain(X, y):
    parent = ((y - y.mean()) ** 2).sum()
    best = 0.0
    for j in range(X.shape[1]):
        values = np.unique(X[:, j])
        for low, high in zip(values[:-1], values[1:]):
            mask = X[:, j] <= (low + high) / 2
            left, right = y[mask], y[~mask]
            sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
            best = max(best, parent - sse)
    return best


def exhaustive_tree_gains(X, y, max_depth, min_samples_split):
    """Grow one tree by trying every feature and every midpoint at each node."""
    gains = np.zeros(X.shape[1])

    def grow(rows, depth):
        if depth >= max_depth or rows.size < min_samples_split:
            return
        ys = y[rows]
        parent = ((ys - ys.mean()) ** 2).sum()
        best = None
        for j in range(X.shape[1]):
            values = np.unique(X[rows, j])
            for low, high in zip(values[:-1], values[1:]):
                mask = X[rows, j] <= (low + high) / 2
                left, right = ys[mask], ys[~mask]
                reduction = parent - ((left - left.mean()) ** 2).sum() - ((right - right.mean()) ** 2).sum()
                if best is None or reduction > best[0]:
                    best = (reduction, j, mask)
        if best is None or best[0] <= 0.0:
            return
        reduction, j, mask = best
        gains[j] += reduction
        grow(rows[mask], depth + 1)
        grow(rows[~mask], depth + 1)

    grow(np.arange(y.size), 0)
    return gains


@pytest.fixture
def data():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(120, 3))
    y = X[:, 0] ** 2 + 0.5 * X[:, 2] + rng.normal(0.0, 0.1, 120)
    return X, y


class TestForestService:
    def test_single_stump_finds_best_split(self, data):
        X, y = data
        config = ForestConfig(tree_count=1, max_depth=1, bootstrap=False, max_features=None)
        forest = ForestService.fit_forest(X, y, config, seed=0)
        tree = forest.trees[0]
        assert tree.node_count == 3
        assert tree.impurity_reduction[0] == pytest.approx(brute_force_root_gain(X, y), rel=1e-9)
        assert forest.total_split_gain == pytest.approx(tree.impurity_reduction[0])

    def test_full_depth_tree_matches_exhaustive_importance(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(-1.0, 1.0, size=(40, 3))
        y = np.sin(3 * X[:, 0]) + X[:, 1] * X[:, 2] + rng.normal(0.0, 0.05, 40)
        config = ForestConfig(tree_count=1, max_depth=30, min_samples_split=2, bootstrap=False, max_features=None)
        forest = ForestService.fit_forest(X, y, config, seed=0)

        expected = exhaustive_tree_gains(X, y, max_depth=30, min_samples_split=2)
        weights = FeatureService.importance(forest).weights
        assert forest.per_feature_gain == pytest.approx(tuple(expected), rel=1e-9, abs=1e-12)
        for j, name in enumerate(forest.feature_names):
            assert weights[name] == pytest.approx(expected[j] / expected.sum(), rel=1e-9, abs=1e-12)

    def test_same_seed_same_forest(self, data):
        X, y = data
        config = ForestConfig(tree_count=8)
        assert ForestService.fit_forest(X, y, config, seed=9) == ForestService.fit_forest(X, y, config, seed=9)

    def test_thread_pool_matches_sequential(self, data):
        X, y = data
        sequential = ForestService.fit_forest(X, y, ForestConfig(tree_count=6), seed=3)
        threaded = ForestService.fit_forest(X, y, ForestConfig(tree_count=6, n_jobs=3), seed=3)
        assert threaded.trees == sequential.trees
        assert threaded.per_feature_gain == sequential.per_feature_gain

    def test_column_permutation_permutes_importances(self, data):
        X, y = data
        config = ForestConfig(tree_count=10, max_features=None)
        names = ["a", "b", "c"]
        forest = ForestService.fit_forest(X, y, config, seed=5, feature_names=names)
        order = [2, 0, 1]
        permuted = ForestService.fit_forest(X[:, order], y, config, seed=5, feature_names=[names[i] for i in order])
        base = FeatureService.importance(forest).weights
        moved = FeatureService.importance(permuted).weights
        for name in names:
            assert moved[name] == pytest.approx(base[name], rel=1e-9)

    def test_column_permutation_with_feature_subsampling(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(200, 5))
        y = 2.0 * X[:, 0] + 0.5 * X[:, 3] + rng.normal(0.0, 0.3, 200)
        names = ["a", "b", "c", "d", "e"]
        config = ForestConfig(tree_count=20)
        forest = ForestService.fit_forest(X, y, config, seed=7, feature_names=names)
        order = [4, 2, 0, 3, 1]
        permuted = ForestService.fit_forest(X[:, order], y, config, seed=7, feature_names=[names[i] for i in order])
        base = FeatureService.importance(forest).weights
        moved = FeatureService.importance(permuted).weights
        for name in names:
            assert moved[name] == pytest.approx(base[name], rel=1e-12, abs=1e-15)

    def test_depth_and_node_gains(self, data):
        X, y = data
        forest = ForestService.fit_forest(X, y, ForestConfig(tree_count=4, max_depth=3), seed=1)
        for tree in forest.trees:
            assert tree.depth <= 3
            assert all(gain >= 0 for gain in tree.impurity_reduction)
            leaves = [i for i, f in enumerate(tree.feature) if f < 0]
            assert sum(tree.n_samples[i] for i in leaves) == tree.n_samples[0]

    def test_predictions_fit_training_signal(self, data):
        X, y = data
        config = ForestConfig(tree_count=20, max_features=None, compute_oob=True)
        forest = ForestService.fit_forest(X, y, config, seed=2)
        prediction = ForestService.predict(forest, X)
        assert prediction.shape == (120,)
        assert np.corrcoef(prediction, y)[0, 1] > 0.9
        assert forest.oob_r2 is not None
        assert forest.oob_r2 > 0.3

    def test_too_few_rows(self):
        with pytest.raises(DataError) as exc_info:
            ForestService.fit_forest(np.zeros((5, 2)), np.zeros(5), ForestConfig())
        assert exc_info.value.code == "insufficient_data"

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            ForestService.fit_forest(np.zeros((20, 2)), np.zeros(19))
