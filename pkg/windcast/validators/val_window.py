from typing import Sequence

import numpy as np

from windcast.models.mod_window import WindowSpec
from windcast.validators.val_errors import DataError, UsageError


class WindowValidator:
    @staticmethod
    def validate_window(past_steps: int, horizon_steps: int):
        """Validate that the past window is at least as long as the horizon"""
        if horizon_steps < 1 or past_steps < 1:
            raise UsageError("window steps must be >= 1", code="invalid_window")
        if horizon_steps > past_steps:
            raise UsageError(
                f"horizon ({horizon_steps} steps) must not exceed the past window ({past_steps} steps)",
                code="invalid_window",
            )

    @staticmethod
    def validate_series_length(row_count: int, spec: WindowSpec, folds: int = 10):
        """Validate that a series is long enough to split and window"""
        minimum = folds * spec.min_segment_length
        if row_count < minimum:
            raise DataError(
                f"series too short: {row_count} rows, at least {minimum} required "
                f"for P={spec.past_steps}, H={spec.horizon_steps}",
                code="series_too_short",
                details={"rows": row_count, "minimum": minimum},
            )

    @staticmethod
    def validate_columns(available: Sequence[str], spec: WindowSpec):
        """Validate that every window column exists in the frame"""
        needed = list(spec.input_features) + [spec.target_feature]
        missing = [name for name in needed if name not in available]
        if missing:
            raise DataError(f"columns not found: {', '.join(missing)}", code="missing_columns")

    @staticmethod
    def validate_finite(values: np.ndarray, name: str):
        if not np.all(np.isfinite(values)):
            raise DataError(f"column {name} contains missing or non-finite values", code="non_finite")

    @staticmethod
    def validate_train_size(sample_count: int):
        if sample_count < 2:
            raise DataError("at least 2 training samples are required to fit a normalizer", code="insufficient_data")
