from typing import Annotated, Dict, List, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from windcast.models.mod_window import Normalizer, WindowSpec


class RidgeKind(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["ridge"] = "ridge"
    lam: float = Field(default=1e-3, ge=0.0)


class FCNNKind(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["fcnn"] = "fcnn"
    hidden_sizes: Tuple[int, ...] = (64, 32)
    activation: Literal["relu", "tanh"] = "relu"

    def layer_sizes(self, input_dim: int) -> Tuple[int, ...]:
        """Full layer sizes, input first; always ends in a single output."""
        return (input_dim, *self.hidden_sizes, 1)


class GRUKind(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["gru"] = "gru"
    hidden_size: int = Field(default=32, ge=1)


ModelKind = Annotated[Union[RidgeKind, FCNNKind, GRUKind], Field(discriminator="kind")]

KIND_NAMES = ("ridge", "fcnn", "gru")


def kind_from_name(name: str) -> Union[RidgeKind, FCNNKind, GRUKind]:
    kinds = {"ridge": RidgeKind, "fcnn": FCNNKind, "gru": GRUKind}
    return kinds[name.lower()]()


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = 0
    learning_rate: float = Field(default=1e-3, gt=0.0)
    max_epochs: int = Field(default=200, ge=1)
    batch_size: int = Field(default=64, ge=1)
    early_stop_patience: int = Field(default=10, ge=1)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)


class EpochRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    epoch: int
    train_loss: float
    val_loss: float


class TrainedModel(BaseModel):
    """A fitted predictor with the normalizer it was trained under."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: ModelKind
    spec: WindowSpec
    parameters: Dict[str, np.ndarray]
    normalizer: Normalizer
    config: TrainConfig
    history: List[EpochRecord]
    best_epoch: int

    @model_validator(mode="after")
    def check_history(self) -> "TrainedModel":
        if not self.history:
            raise ValueError("history must not be empty")
        best = min(self.history, key=lambda rec: rec.val_loss)
        if self.history_record(self.best_epoch).val_loss != best.val_loss:
            raise ValueError("best_epoch must carry the minimal recorded val loss")
        return self

    def history_record(self, epoch: int) -> EpochRecord:
        for record in self.history:
            if record.epoch == epoch:
                return record
        raise ValueError(f"epoch {epoch} not in history")

    @property
    def kind_name(self) -> str:
        return self.kind.kind

    @property
    def input_shape(self) -> Tuple[int, int]:
        return (self.spec.past_steps, self.spec.feature_count)

    @property
    def best_val_loss(self) -> float:
        return self.history_record(self.best_epoch).val_loss
