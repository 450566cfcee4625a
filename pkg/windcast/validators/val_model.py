from typing import Tuple

import numpy as np

from windcast.validators.val_errors import DataError


class ModelValidator:
    @staticmethod
    def validate_splits(train_size: int, val_size: int):
        """Validate that fitting has both training and validation samples"""
        if train_size == 0 or val_size == 0:
            raise DataError(
                f"train and val splits must be non-empty (train={train_size}, val={val_size})",
                code="empty_split",
            )

    @staticmethod
    def validate_input_shape(inputs: np.ndarray, expected: Tuple[int, int]):
        """Validate a batch (N x P x F) or a single window (P x F) against the model"""
        actual = tuple(inputs.shape[-2:]) if inputs.ndim >= 2 else tuple(inputs.shape)
        if inputs.ndim not in (2, 3) or actual != tuple(expected):
            raise DataError(
                f"input shape mismatch: expected (N, {expected[0]}, {expected[1]}) or {expected}, "
                f"got {tuple(inputs.shape)}",
                code="shape_mismatch",
                details={"expected": list(expected), "actual": list(inputs.shape)},
            )
