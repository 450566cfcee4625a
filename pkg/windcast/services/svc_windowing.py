from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from windcast.configuration.monitor import get_logger
from windcast.models.mod_series import SeriesDataset
from windcast.models.mod_window import Normalizer, WindowedSet, WindowedSplit, WindowSpec
from windcast.validators.val_errors import DataError
from windcast.validators.val_window import WindowValidator

logger = get_logger(__name__)

DEFAULT_RATIOS = (8, 1, 1)


class WindowingService:
    @staticmethod
    def split_points(row_count: int, ratios: Sequence[int] = DEFAULT_RATIOS) -> Tuple[int, int]:
        """Raw-row cut points, floored; the remainder goes to the last segment."""
        total = sum(ratios)
        first = row_count * ratios[0] // total
        second = row_count * (ratios[0] + ratios[1]) // total
        return first, second

    @staticmethod
    def split_series(
        source: Union[SeriesDataset, pd.DataFrame],
        spec: WindowSpec,
        ratios: Sequence[int] = DEFAULT_RATIOS,
    ) -> Tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
        """
        Cut a series into contiguous train/val/test segments.
        Segments keep the raw row index so that windows can be traced back.
        """
        frame = source.to_frame() if isinstance(source, SeriesDataset) else source
        frame = frame.reset_index(drop=True)
        WindowValidator.validate_series_length(len(frame), spec, folds=sum(ratios))
        first, second = WindowingService.split_points(len(frame), ratios)
        return frame.iloc[:first], frame.iloc[first:second], frame.iloc[second:]

    @staticmethod
    def make_windows(segment: pd.DataFrame, spec: WindowSpec) -> WindowedSplit:
        """
        Stride-1 windows inside one segment. Sample i reads rows [i, i+P) and
        targets row i+P+H-1; a segment shorter than P+H yields no samples.
        """
        WindowValidator.validate_columns(list(segment.columns), spec)
        past, horizon = spec.past_steps, spec.horizon_steps
        length = len(segment)
        start = int(segment.index[0]) if length else 0
        count = max(0, length - past - horizon + 1)
        if count == 0:
            return WindowedSplit(
                inputs=np.empty((0, past, spec.feature_count)),
                targets=np.empty(0),
                t_index=np.empty(0, dtype=int),
                segment_start=start,
                segment_stop=start + length,
            )
        values = segment[list(spec.input_features)].to_numpy(dtype=float)
        targets = segment[spec.target_feature].to_numpy(dtype=float)
        for name, column in zip(spec.input_features, values.T):
            WindowValidator.validate_finite(column, name)
        WindowValidator.validate_finite(targets, spec.target_feature)

        # sliding_window_view puts the window axis last: (L-P+1, F, P)
        windows = sliding_window_view(values, past, axis=0)[:count]
        inputs = np.ascontiguousarray(windows.transpose(0, 2, 1))
        offsets = np.arange(count) + past + horizon - 1
        return WindowedSplit(
            inputs=inputs,
            targets=targets[offsets].copy(),
            t_index=start + offsets,
            segment_start=start,
            segment_stop=start + length,
        )

    @staticmethod
    def fit_normalizer(train: WindowedSplit, spec: WindowSpec, allow_constant: bool = False) -> Normalizer:
        """
        z-score statistics over the training samples only.

        A zero-variance column is an error unless allow_constant is set, in which
        case it is centered with unit scale and listed in constant_features.
        """
        WindowValidator.validate_train_size(len(train))
        rows = train.inputs.reshape(-1, spec.feature_count)
        input_mean = rows.mean(axis=0)
        input_std = rows.std(axis=0)
        target_mean = float(train.targets.mean())
        target_std = float(train.targets.std())

        constant = [name for name, std in zip(spec.input_features, input_std) if std == 0.0]
        if target_std == 0.0 and spec.target_feature not in constant:
            constant.append(spec.target_feature)
        if constant:
            if not allow_constant:
                raise DataError(
                    f"zero variance in the training split for: {', '.join(constant)}",
                    code="zero_variance",
                    details={"features": constant},
                )
            logger.warning("Constant training columns kept at unit scale: %s", ", ".join(constant))
            input_std = np.where(input_std == 0.0, 1.0, input_std)
            target_std = target_std or 1.0

        return Normalizer(
            input_features=spec.input_features,
            input_mean=tuple(input_mean.tolist()),
            input_std=tuple(input_std.tolist()),
            target_feature=spec.target_feature,
            target_mean=target_mean,
            target_std=target_std,
            constant_features=tuple(constant),
        )

    @staticmethod
    def build_windowed_set(
        source: Union[SeriesDataset, pd.DataFrame],
        spec: WindowSpec,
        ratios: Sequence[int] = DEFAULT_RATIOS,
        allow_constant: bool = False,
    ) -> WindowedSet:
        """Split, then window each segment, then fit the normalizer on train."""
        train_seg, val_seg, test_seg = WindowingService.split_series(source, spec, ratios)
        train = WindowingService.make_windows(train_seg, spec)
        val = WindowingService.make_windows(val_seg, spec)
        test = WindowingService.make_windows(test_seg, spec)
        normalizer = WindowingService.fit_normalizer(train, spec, allow_constant=allow_constant)
        logger.info(
            "Windowed P=%d H=%d: %d/%d/%d samples", spec.past_steps, spec.horizon_steps, len(train), len(val), len(test)
        )
        return WindowedSet(
            spec=spec,
            train=train,
            val=val,
            test=test,
            normalizer=normalizer,
            row_count=len(train_seg) + len(val_seg) + len(test_seg),
        )

    @staticmethod
    def normalized(split: WindowedSplit, normalizer: Normalizer) -> Tuple[np.ndarray, np.ndarray]:
        return normalizer.apply_inputs(split.inputs), normalizer.apply_target(split.targets)

    @staticmethod
    def windowed_frame(windowed: WindowedSet) -> pd.DataFrame:
        """One row per sample: split name, target index, flattened raw inputs, target."""
        spec = windowed.spec
        columns = [
            f"{name}_t-{spec.past_steps - 1 - step}"
            for step in range(spec.past_steps)
            for name in spec.input_features
        ]
        parts = []
        for name in windowed.split_names:
            split = windowed.split(name)
            part = pd.DataFrame(split.inputs.reshape(len(split), -1), columns=columns)
            part.insert(0, "t_index", split.t_index)
            part.insert(0, "split", name)
            part[spec.target_feature] = split.targets
            parts.append(part)
        return pd.concat(parts, ignore_index=True)

    @staticmethod
    def export_csv(windowed: WindowedSet, path: Union[str, Path]) -> None:
        WindowingService.windowed_frame(windowed).to_csv(path, index=False, lineterminator="\n", float_format="%.6f")
