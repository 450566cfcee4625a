from typing import Iterator, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

STEP_MINUTES = 10


class WindowSpec(BaseModel):
    """Past P steps of the input features predict the target H steps ahead."""

    model_config = ConfigDict(frozen=True)

    past_steps: int = Field(default=18, ge=1)
    horizon_steps: int = Field(default=1, ge=1)
    input_features: Tuple[str, ...]
    target_feature: str

    @model_validator(mode="after")
    def check_steps(self) -> "WindowSpec":
        if self.horizon_steps > self.past_steps:
            raise ValueError(
                f"past steps ({self.past_steps}) must be >= horizon steps ({self.horizon_steps})"
            )
        if not self.input_features:
            raise ValueError("at least one input feature is required")
        return self

    @property
    def feature_count(self) -> int:
        return len(self.input_features)

    @property
    def min_segment_length(self) -> int:
        return self.past_steps + self.horizon_steps


class WindowedSample(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    input: np.ndarray  # P x F
    target: float
    t_index: int


class WindowedSplit(BaseModel):
    """Samples of one split held as stacked arrays; raw (un-normalized) units."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    inputs: np.ndarray  # N x P x F
    targets: np.ndarray  # N
    t_index: np.ndarray  # N, raw row index of each target
    segment_start: int
    segment_stop: int

    def __len__(self) -> int:
        return int(self.targets.shape[0])

    def samples(self) -> Iterator[WindowedSample]:
        for i in range(len(self)):
            yield WindowedSample(input=self.inputs[i], target=float(self.targets[i]), t_index=int(self.t_index[i]))


class Normalizer(BaseModel):
    """z-score statistics fit on the training split only."""

    model_config = ConfigDict(frozen=True)

    input_features: Tuple[str, ...]
    input_mean: Tuple[float, ...]
    input_std: Tuple[float, ...]
    target_feature: str
    target_mean: float
    target_std: float
    # Zero-variance columns kept centered with unit scale when tolerated at fit time.
    constant_features: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def check_scales(self) -> "Normalizer":
        if any(s <= 0 for s in self.input_std) or self.target_std <= 0:
            raise ValueError("normalizer scales must be positive")
        return self

    def apply_inputs(self, inputs: np.ndarray) -> np.ndarray:
        return (inputs - np.asarray(self.input_mean)) / np.asarray(self.input_std)

    def invert_inputs(self, z: np.ndarray) -> np.ndarray:
        return z * np.asarray(self.input_std) + np.asarray(self.input_mean)

    def apply_target(self, target: np.ndarray) -> np.ndarray:
        return (target - self.target_mean) / self.target_std

    def invert_target(self, z: np.ndarray) -> np.ndarray:
        return z * self.target_std + self.target_mean


class WindowedSet(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: WindowSpec
    train: WindowedSplit
    val: WindowedSplit
    test: WindowedSplit
    normalizer: Normalizer
    row_count: int

    def split(self, name: str) -> WindowedSplit:
        if name not in ("train", "val", "test"):
            raise KeyError(name)
        return getattr(self, name)

    @property
    def split_names(self) -> List[str]:
        return ["train", "val", "test"]
