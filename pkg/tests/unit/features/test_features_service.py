import json

import numpy as np
import pandas as pd
import pytest

from windcast.models.mod_features import (
    CANDIDATE_FEATURES,
    CorrelationMatrix,
    DropReason,
    FeatureImportance,
    ForestConfig,
    SelectionPolicy,
)
from windcast.services.svc_features import FeatureService
from windcast.services.svc_fixtures import FixtureService
from windcast.validators.val_errors import DataError


def correlation_of(pairs, names=CANDIDATE_FEATURES, default=0.5):
    """Symmetric matrix with `default` off the diagonal, overridden by `pairs`."""
    index = {name: i for i, name in enumerate(names)}
    values = [[1.0 if i == j else default for j in range(len(names))] for i in range(len(names))]
    for (a, b), r in pairs.items():
        values[index[a]][index[b]] = values[index[b]][index[a]] = r
    return CorrelationMatrix(feature_names=tuple(names), values=tuple(tuple(row) for row in values))


class TestPearsonMatrix:
    @pytest.fixture
    def frame(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=200)
        return pd.DataFrame({
            "A": x,
            "B": 2.0 * x + 1.0,
            "C": -0.5 * x + 3.0,
            "D": rng.normal(size=200),
        })

    def test_perfect_correlations(self, frame):
        corr = FeatureService.pearson_matrix(frame, ["A", "B", "C"])
        assert corr.get("A", "B") == pytest.approx(1.0)
        assert corr.get("A", "C") == pytest.approx(-1.0)
        assert corr.get("B", "A") == corr.get("A", "B")
        assert corr.get("A", "A") == 1.0

    def test_matches_numpy(self, frame):
        corr = FeatureService.pearson_matrix(frame, ["A", "D"])
        expected = np.corrcoef(frame["A"], frame["D"])[0, 1]
        assert corr.get("A", "D") == pytest.approx(expected, abs=1e-12)

    def test_constructed_correlation(self):
        rng = np.random.default_rng(1)
        z1 = rng.normal(size=5000)
        z2 = rng.normal(size=5000)
        frame = pd.DataFrame({"X": z1, "Y": 0.8 * z1 + 0.6 * z2})
        assert FeatureService.pearson_matrix(frame, ["X", "Y"]).get("X", "Y") == pytest.approx(0.8, abs=0.02)

    def test_affine_invariance(self, frame):
        base = FeatureService.pearson_matrix(frame, ["A", "D"]).get("A", "D")
        shifted = frame.assign(D=frame["D"] * 4.0 - 7.0)
        assert FeatureService.pearson_matrix(shifted, ["A", "D"]).get("A", "D") == pytest.approx(base, abs=1e-12)
        flipped = frame.assign(D=-frame["D"])
        assert FeatureService.pearson_matrix(flipped, ["A", "D"]).get("A", "D") == pytest.approx(-base, abs=1e-12)

    def test_zero_variance_feature_is_undefined(self, frame):
        corr = FeatureService.pearson_matrix(frame.assign(D=3.0), ["A", "B", "D"])
        assert corr.undefined == ("D",)
        assert np.isnan(corr.get("A", "D"))
        assert corr.get("D", "D") == 1.0
        assert corr.get("A", "B") == pytest.approx(1.0)

    def test_rows_with_gaps_are_dropped(self, frame):
        gappy = frame.copy()
        gappy.loc[5, "A"] = np.nan
        gappy.loc[9, "D"] = np.nan
        corr = FeatureService.pearson_matrix(gappy, ["A", "D"])
        assert corr.row_count == 198

    def test_missing_column(self, frame):
        with pytest.raises(DataError) as exc_info:
            FeatureService.pearson_matrix(frame, ["A", "WSPD"])
        assert exc_info.value.code == "missing_columns"

    def test_too_few_rows(self):
        with pytest.raises(DataError) as exc_info:
            FeatureService.pearson_matrix(pd.DataFrame({"A": [1.0], "B": [2.0]}), ["A", "B"])
        assert exc_info.value.code == "insufficient_data"

    def test_fixture_series_over_candidates(self):
        corr = FeatureService.pearson_matrix(FixtureService.synthetic_series(n_rows=2000, seed=7))
        assert corr.feature_names == CANDIDATE_FEATURES
        assert corr.get("WSPD", "GST") > 0.9
        assert corr.get("ATMP", "WTMP") > 0.85


class TestImportance:
    @pytest.fixture
    def signal_data(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(-1.0, 1.0, size=(300, 4))
        y = 3.0 * X[:, 1] + rng.normal(0.0, 0.05, 300)
        return X, y

    def test_weights_sum_to_one(self, signal_data):
        X, y = signal_data
        forest = FeatureService.fit_forest(X, y, ForestConfig(tree_count=10), seed=1)
        weights = FeatureService.importance(forest).weights
        assert sum(weights.values()) == pytest.approx(1.0)
        assert all(w >= 0 for w in weights.values())

    def test_signal_feature_dominates(self, signal_data):
        X, y = signal_data
        forest = FeatureService.fit_forest(
            X, y, ForestConfig(tree_count=20, max_features=None), seed=1, feature_names=["a", "b", "c", "d"]
        )
        importance = FeatureService.importance(forest)
        assert importance.weights["b"] > 0.9
        assert importance.degenerate is False

    def test_constant_target_is_degenerate(self):
        X = np.random.default_rng(3).normal(size=(50, 3))
        forest = FeatureService.fit_forest(X, np.full(50, 4.0), ForestConfig(tree_count=5), seed=0)
        importance = FeatureService.importance(forest)
        assert importance.degenerate is True
        assert list(importance.weights.values()) == pytest.approx([1 / 3] * 3)

    def test_forest_inputs_align_target_one_step_ahead(self):
        frame = pd.DataFrame({name: np.arange(6, dtype=float) + i for i, name in enumerate(CANDIDATE_FEATURES)})
        frame.loc[2, "PRES"] = np.nan
        X, y = FeatureService.forest_inputs(frame)
        assert X.shape == (4, 7)
        # WSPD is column 1, offset by 1 from the row number.
        np.testing.assert_array_equal(y, [2.0, 3.0, 5.0, 6.0])
        np.testing.assert_array_equal(X[:, 1], [1.0, 2.0, 4.0, 5.0])


class TestSelectFeatures:
    @pytest.fixture
    def corr(self):
        return correlation_of({
            ("WDIR", "WSPD"): 0.05,
            ("ATMP", "WTMP"): 0.95,
            ("ATMP", "DEWP"): 0.9,
            ("WTMP", "DEWP"): 0.88,
        })

    @pytest.fixture
    def importances(self):
        return FeatureImportance(weights={
            "WDIR": 0.02, "WSPD": 0.6, "GST": 0.2, "PRES": 0.08, "ATMP": 0.05, "WTMP": 0.04, "DEWP": 0.01,
        })

    def test_drops_weak_and_redundant(self, corr, importances):
        selection = FeatureService.select_features(corr, importances)
        assert selection.kept == ("WSPD", "GST", "PRES", "ATMP", "WTMP")
        assert selection.dropped == {"WDIR": DropReason.LOW_CORRELATION, "DEWP": DropReason.REDUNDANT}

    def test_equal_importances_drop_nothing_redundant(self, corr):
        uniform = {name: 1 / 7 for name in CANDIDATE_FEATURES}
        selection = FeatureService.select_features(corr, uniform)
        assert "DEWP" in selection.kept
        assert set(selection.dropped) == {"WDIR"}

    def test_block_needs_every_pair_above_threshold(self, importances):
        corr = correlation_of({("ATMP", "WTMP"): 0.95, ("ATMP", "DEWP"): 0.9, ("WTMP", "DEWP"): 0.85})
        selection = FeatureService.select_features(corr, importances)
        assert "DEWP" in selection.kept

    def test_undefined_correlation_counts_as_weak(self, importances):
        corr = correlation_of({("PRES", "WSPD"): float("nan"), ("PRES", "GST"): float("nan")}, default=0.3)
        selection = FeatureService.select_features(corr, importances)
        assert selection.dropped["PRES"] == DropReason.LOW_CORRELATION

    def test_minimum_importance_rule(self, corr, importances):
        selection = FeatureService.select_features(corr, importances, SelectionPolicy(min_importance=0.06))
        assert selection.dropped["ATMP"] == DropReason.LOW_IMPORTANCE
        assert selection.dropped["WTMP"] == DropReason.LOW_IMPORTANCE
        assert selection.dropped["DEWP"] == DropReason.REDUNDANT
        assert "WSPD" in selection.kept

    def test_partition_of_candidates(self, corr, importances):
        selection = FeatureService.select_features(corr, importances)
        assert set(selection.kept) | set(selection.dropped) == set(CANDIDATE_FEATURES)
        assert not set(selection.kept) & set(selection.dropped)

    def test_mismatched_candidates(self, corr):
        with pytest.raises(DataError) as exc_info:
            FeatureService.select_features(corr, {"WSPD": 1.0})
        assert exc_info.value.code == "candidate_mismatch"


class TestFeatureFiles:
    def test_correlation_json_writes_null_for_undefined(self, tmp_path):
        corr = correlation_of({("WDIR", "WSPD"): float("nan")})
        FeatureService.write_correlation(corr, tmp_path / "corr.csv", tmp_path / "corr.json")
        document = json.loads((tmp_path / "corr.json").read_text())
        assert document["feature_names"] == list(CANDIDATE_FEATURES)
        assert document["values"][0][1] is None
        frame = pd.read_csv(tmp_path / "corr.csv", index_col=0)
        assert list(frame.columns) == list(CANDIDATE_FEATURES)

    def test_importance_files(self, tmp_path):
        importances = FeatureImportance(weights={"WSPD": 0.75, "GST": 0.25})
        FeatureService.write_importance(importances, tmp_path / "imp.csv", tmp_path / "imp.json")
        document = json.loads((tmp_path / "imp.json").read_text())
        assert document == {"weights": {"WSPD": 0.75, "GST": 0.25}, "degenerate": False}
        frame = pd.read_csv(tmp_path / "imp.csv")
        assert list(frame["feature"]) == ["WSPD", "GST"]
