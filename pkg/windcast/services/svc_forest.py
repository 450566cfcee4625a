import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from windcast.configuration.monitor import get_logger
from windcast.models.mod_features import ForestConfig, RegressionForest, RegressionTree
from windcast.validators.val_errors import DataError

logger = get_logger(__name__)


class ForestService:
    """Random-forest regression with variance-reduction splits, built on numpy."""

    @staticmethod
    def fit_forest(
        X: np.ndarray,
        y: np.ndarray,
        config: ForestConfig = ForestConfig(),
        seed: int = 0,
        feature_names: Optional[Sequence[str]] = None,
    ) -> RegressionForest:
        """
        Fit config.tree_count trees, each on a seeded bootstrap resample.

        Per-tree generators are spawned from the master seed, so the forest is
        identical whether trees are grown sequentially or on a thread pool.
        """
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DataError(f"X rows ({X.shape[0]}) must match y length ({y.shape[0]})", code="shape_mismatch")
        if X.shape[0] < config.min_samples_split:
            raise DataError(
                f"at least min_samples_split={config.min_samples_split} rows are required, got {X.shape[0]}",
                code="insufficient_data",
            )
        n, n_features = X.shape
        names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(n_features))
        subset = ForestService._subset_size(config.max_features, n_features)
        # Candidates are drawn and scanned by feature name, not column position.
        canonical = np.array(sorted(range(n_features), key=lambda j: (names[j], j)), dtype=int)
        sequences = np.random.SeedSequence(seed).spawn(config.tree_count)

        def grow(seq: np.random.SeedSequence) -> Tuple[RegressionTree, np.ndarray]:
            rng = np.random.default_rng(seq)
            if config.bootstrap:
                rows = rng.integers(0, n, size=n)
            else:
                rows = np.arange(n)
            tree = ForestService._grow_tree(X[rows], y[rows], config, subset, canonical, rng)
            return tree, rows

        if config.n_jobs > 1:
            with ThreadPoolExecutor(max_workers=config.n_jobs) as pool:
                grown = list(pool.map(grow, sequences))
        else:
            grown = [grow(seq) for seq in sequences]
        trees = [tree for tree, _ in grown]

        per_feature = np.zeros(n_features)
        for tree in trees:
            for feature, gain in zip(tree.feature, tree.impurity_reduction):
                if feature >= 0:
                    per_feature[feature] += gain

        oob_r2 = None
        if config.compute_oob and config.bootstrap:
            oob_r2 = ForestService._oob_r2(X, y, grown)
        logger.info("Fitted forest of %d trees on %d rows x %d features", len(trees), n, n_features)
        return RegressionForest(
            feature_names=names,
            config=config,
            seed=seed,
            trees=tuple(trees),
            per_feature_gain=tuple(per_feature.tolist()),
            total_split_gain=float(per_feature.sum()),
            oob_r2=oob_r2,
        )

    @staticmethod
    def _subset_size(max_features: Optional[str], n_features: int) -> int:
        if max_features is None:
            return n_features
        if max_features == "sqrt":
            return max(1, math.ceil(math.sqrt(n_features)))
        raise DataError(f"unsupported max_features: {max_features}", code="invalid_config")

    @staticmethod
    def _grow_tree(
        X: np.ndarray,
        y: np.ndarray,
        config: ForestConfig,
        subset: int,
        canonical: np.ndarray,
        rng: np.random.Generator,
    ) -> RegressionTree:
        feature: List[int] = []
        threshold: List[float] = []
        left: List[int] = []
        right: List[int] = []
        value: List[float] = []
        gain: List[float] = []
        n_samples: List[int] = []

        def new_node(rows: np.ndarray) -> int:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(y[rows].mean()))
            gain.append(0.0)
            n_samples.append(int(rows.size))
            return len(feature) - 1

        def build(rows: np.ndarray, depth: int) -> int:
            # Nodes are numbered in preorder: a node, its left subtree, then its right subtree.
            node = new_node(rows)
            if depth >= config.max_depth or rows.size < config.min_samples_split:
                return node
            picks = np.sort(rng.choice(canonical.size, size=subset, replace=False))
            candidates = canonical[picks]
            split = ForestService._best_split(X[rows], y[rows], candidates)
            if split is None:
                return node
            j, cut, reduction, goes_left = split
            feature[node] = int(j)
            threshold[node] = float(cut)
            gain[node] = float(reduction)
            left[node] = build(rows[goes_left], depth + 1)
            right[node] = build(rows[~goes_left], depth + 1)
            return node

        build(np.arange(y.size), 0)
        return RegressionTree(
            feature=tuple(feature),
            threshold=tuple(threshold),
            left=tuple(left),
            right=tuple(right),
            value=tuple(value),
            impurity_reduction=tuple(gain),
            n_samples=tuple(n_samples),
        )

    @staticmethod
    def _best_split(
        X: np.ndarray, y: np.ndarray, candidates: np.ndarray
    ) -> Optional[Tuple[int, float, float, np.ndarray]]:
        """
        Best variance-reduction split among the candidate features.
        The reduction is n*Var(parent) - n_l*Var(left) - n_r*Var(right).
        """
        n = y.size
        total = y.sum()
        parent_sse = float(((y - y.mean()) ** 2).sum())
        if parent_sse <= 0.0:
            return None
        best: Optional[Tuple[int, float, float]] = None
        for j in candidates:
            order = np.argsort(X[:, j], kind="stable")
            xs = X[order, j]
            ys = y[order]
            # Valid cut positions sit between distinct consecutive values.
            valid = np.flatnonzero(xs[1:] > xs[:-1])
            if valid.size == 0:
                continue
            csum = np.cumsum(ys)
            csq = np.cumsum(ys * ys)
            n_left = valid + 1.0
            n_right = n - n_left
            sum_left = csum[valid]
            sum_right = total - sum_left
            sq_total = csq[-1]
            sse_left = csq[valid] - sum_left ** 2 / n_left
            sse_right = (sq_total - csq[valid]) - sum_right ** 2 / n_right
            reduction = parent_sse - sse_left - sse_right
            k = int(np.argmax(reduction))
            if best is None or reduction[k] > best[2]:
                cut = 0.5 * (xs[valid[k]] + xs[valid[k] + 1])
                if cut >= xs[valid[k] + 1]:
                    # Adjacent floats: the midpoint rounds up onto the right value.
                    cut = xs[valid[k]]
                best = (int(j), float(cut), float(reduction[k]))
        if best is None or best[2] <= 0.0:
            return None
        j, cut, reduction = best
        return j, cut, reduction, X[:, j] <= cut

    @staticmethod
    def predict_tree(tree: RegressionTree, X: np.ndarray) -> np.ndarray:
        feature = np.asarray(tree.feature)
        threshold = np.asarray(tree.threshold)
        left = np.asarray(tree.left)
        right = np.asarray(tree.right)
        value = np.asarray(tree.value)
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        while True:
            active = feature[node] >= 0
            if not active.any():
                break
            r = rows[active]
            n = node[active]
            goes_left = X[r, feature[n]] <= threshold[n]
            node[r] = np.where(goes_left, left[n], right[n])
        return value[node]

    @staticmethod
    def predict(forest: RegressionForest, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.mean([ForestService.predict_tree(tree, X) for tree in forest.trees], axis=0)

    @staticmethod
    def _oob_r2(X: np.ndarray, y: np.ndarray, grown: List[Tuple[RegressionTree, np.ndarray]]) -> Optional[float]:
        totals = np.zeros(y.size)
        counts = np.zeros(y.size)
        for tree, rows in grown:
            out_of_bag = np.ones(y.size, dtype=bool)
            out_of_bag[rows] = False
            if out_of_bag.any():
                totals[out_of_bag] += ForestService.predict_tree(tree, X[out_of_bag])
                counts[out_of_bag] += 1
        seen = counts > 0
        if seen.sum() < 2:
            return None
        prediction = totals[seen] / counts[seen]
        truth = y[seen]
        ss_tot = float(((truth - truth.mean()) ** 2).sum())
        if ss_tot == 0.0:
            return None
        return 1.0 - float(((truth - prediction) ** 2).sum()) / ss_tot
