import json
import math
from pathlib import Path
from typing import Dict, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from windcast.configuration.monitor import get_logger
from windcast.models.mod_features import (
    CANDIDATE_FEATURES,
    CorrelationMatrix,
    DropReason,
    FeatureImportance,
    FeatureSelection,
    ForestConfig,
    RegressionForest,
    SelectionPolicy,
)
from windcast.models.mod_series import SeriesDataset
from windcast.services.svc_forest import ForestService
from windcast.validators.val_errors import DataError

logger = get_logger(__name__)


class FeatureService:
    @staticmethod
    def _frame(source: Union[SeriesDataset, pd.DataFrame]) -> pd.DataFrame:
        return source.to_frame() if isinstance(source, SeriesDataset) else source

    @staticmethod
    def pearson_matrix(
        source: Union[SeriesDataset, pd.DataFrame],
        feature_names: Sequence[str] = CANDIDATE_FEATURES,
    ) -> CorrelationMatrix:
        """
        Pearson r for every pair of features over rows complete in all of them
        (listwise deletion). A zero-variance feature leaves its off-diagonal
        entries NaN and is reported in `undefined`.
        """
        frame = FeatureService._frame(source)
        missing = [name for name in feature_names if name not in frame.columns]
        if missing:
            raise DataError(f"columns not found: {', '.join(missing)}", code="missing_columns")
        data = frame[list(feature_names)].to_numpy(dtype=float)
        data = data[~np.isnan(data).any(axis=1)]
        if data.shape[0] < 2:
            raise DataError("at least 2 complete rows are required for correlation", code="insufficient_data")

        centered = data - data.mean(axis=0)
        norms = np.sqrt((centered ** 2).sum(axis=0))
        size = len(feature_names)
        values = [[float("nan")] * size for _ in range(size)]
        undefined = tuple(name for name, norm in zip(feature_names, norms) if norm == 0.0)
        for i in range(size):
            values[i][i] = 1.0
            for j in range(i + 1, size):
                if norms[i] == 0.0 or norms[j] == 0.0:
                    continue
                r = float(np.dot(centered[:, i], centered[:, j]) / (norms[i] * norms[j]))
                r = min(1.0, max(-1.0, r))
                values[i][j] = values[j][i] = r
        if undefined:
            logger.warning("Correlation undefined for zero-variance features: %s", ", ".join(undefined))
        return CorrelationMatrix(
            feature_names=tuple(feature_names),
            values=tuple(tuple(row) for row in values),
            undefined=undefined,
            row_count=int(data.shape[0]),
        )

    @staticmethod
    def forest_inputs(
        source: Union[SeriesDataset, pd.DataFrame],
        feature_names: Sequence[str] = CANDIDATE_FEATURES,
        target: str = "WSPD",
        horizon_steps: int = 1,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Candidates at t against the target at t + horizon, complete rows only."""
        frame = FeatureService._frame(source)
        X = frame[list(feature_names)].to_numpy(dtype=float)[:-horizon_steps]
        y = frame[target].to_numpy(dtype=float)[horizon_steps:]
        keep = ~(np.isnan(X).any(axis=1) | np.isnan(y))
        return X[keep], y[keep]

    @staticmethod
    def fit_forest(
        X: np.ndarray,
        y: np.ndarray,
        config: ForestConfig = ForestConfig(),
        seed: int = 0,
        feature_names: Sequence[str] = None,
    ) -> RegressionForest:
        return ForestService.fit_forest(X, y, config=config, seed=seed, feature_names=feature_names)

    @staticmethod
    def importance(forest: RegressionForest) -> FeatureImportance:
        """
        Share of the forest's total impurity reduction contributed by each feature.
        A forest without a single split gets uniform weights and is flagged degenerate.
        """
        names = forest.feature_names
        gains = np.asarray(forest.per_feature_gain, dtype=float)
        total = float(gains.sum())
        if total <= 0.0:
            logger.warning("Forest has no splits; importances are uniform")
            return FeatureImportance(weights={name: 1.0 / len(names) for name in names}, degenerate=True)
        weights = gains / total
        return FeatureImportance(weights={name: float(w) for name, w in zip(names, weights)})

    @staticmethod
    def select_features(
        corr: CorrelationMatrix,
        importances: Union[FeatureImportance, Mapping[str, float]],
        policy: SelectionPolicy = SelectionPolicy(),
    ) -> FeatureSelection:
        """
        Drop features weakly correlated with the target, then the least important
        member of each redundancy block whose members are pairwise correlated
        above the redundancy threshold.
        """
        weights: Dict[str, float] = dict(importances.weights if isinstance(importances, FeatureImportance) else importances)
        candidates = tuple(corr.feature_names)
        if set(weights) != set(candidates):
            raise DataError("correlation and importances must cover the same candidate set", code="candidate_mismatch")
        if policy.target not in candidates:
            raise DataError(f"target {policy.target} is not a candidate", code="candidate_mismatch")

        dropped: Dict[str, DropReason] = {}
        for name in candidates:
            if name == policy.target:
                continue
            r = corr.get(name, policy.target)
            if math.isnan(r) or abs(r) < policy.low_correlation_threshold:
                dropped[name] = DropReason.LOW_CORRELATION

        for block in policy.redundancy_blocks:
            members = [name for name in block if name in candidates and name not in dropped and name != policy.target]
            if len(members) < 2:
                continue
            pairs = [corr.get(a, b) for i, a in enumerate(members) for b in members[i + 1:]]
            if any(math.isnan(r) or abs(r) <= policy.redundancy_threshold for r in pairs):
                continue
            lowest = min(members, key=lambda name: weights[name])
            # Equal importances name no member to drop.
            if sum(1 for name in members if weights[name] == weights[lowest]) > 1:
                continue
            dropped[lowest] = DropReason.REDUNDANT

        if policy.min_importance > 0:
            for name in candidates:
                if name != policy.target and name not in dropped and weights[name] < policy.min_importance:
                    dropped[name] = DropReason.LOW_IMPORTANCE

        kept = tuple(name for name in candidates if name not in dropped)
        logger.info("Selected features %s; dropped %s", ", ".join(kept), ", ".join(dropped) or "none")
        return FeatureSelection(candidates=candidates, kept=kept, dropped=dropped)

    @staticmethod
    def correlation_frame(corr: CorrelationMatrix) -> pd.DataFrame:
        return pd.DataFrame(corr.values, index=corr.feature_names, columns=corr.feature_names)

    @staticmethod
    def importance_frame(importances: FeatureImportance) -> pd.DataFrame:
        return pd.DataFrame({"feature": list(importances.weights), "importance": list(importances.weights.values())})

    @staticmethod
    def write_correlation(corr: CorrelationMatrix, csv_path: Union[str, Path], json_path: Union[str, Path]) -> None:
        FeatureService.correlation_frame(corr).to_csv(csv_path, lineterminator="\n", float_format="%.6f")
        document = {
            "feature_names": list(corr.feature_names),
            "values": [[None if math.isnan(v) else round(v, 6) for v in row] for row in corr.values],
            "undefined": list(corr.undefined),
            "row_count": corr.row_count,
        }
        Path(json_path).write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")

    @staticmethod
    def write_importance(importances: FeatureImportance, csv_path: Union[str, Path], json_path: Union[str, Path]) -> None:
        FeatureService.importance_frame(importances).to_csv(csv_path, index=False, lineterminator="\n", float_format="%.6f")
        document = {"weights": {k: round(v, 6) for k, v in importances.weights.items()}, "degenerate": importances.degenerate}
        Path(json_path).write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
