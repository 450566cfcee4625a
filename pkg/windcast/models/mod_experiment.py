from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from windcast.models.mod_metrics import MetricReport
from windcast.models.mod_model import TrainConfig, TrainedModel
from windcast.models.mod_turbine import TurbineSpec


class CaseFeature(str, Enum):
    WSPD_LOW = "WSPD_3.8m"
    WSPD_HUB = "WSPD_100m"
    GST_LOW = "GST_3.8m"
    GST_HUB = "GST_100m"
    PRES = "PRES"
    ATMP = "ATMP"
    WTMP = "WTMP"
    POWER = "POWER"


SPEED_TARGETS = (CaseFeature.WSPD_LOW, CaseFeature.WSPD_HUB)


class CaseSpec(BaseModel):
    """One input/output feature combination of the nine-case experiment."""

    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=1, le=9)
    mode: Literal[1, 2, 3]
    input_features: Tuple[CaseFeature, ...]
    target: Literal[CaseFeature.WSPD_LOW, CaseFeature.WSPD_HUB, CaseFeature.POWER]
    eval_spaces: Tuple[Literal["native", "power"], ...] = ("native", "power")
    # Cases sharing a seed group train under the same per-cell seed.
    seed_group: int

    @model_validator(mode="after")
    def check_target(self) -> "CaseSpec":
        if self.mode in (1, 2) and self.target not in self.input_features:
            raise ValueError(f"case {self.id}: modes 1-2 must include the target among the inputs")
        return self

    @property
    def label(self) -> str:
        return f"Case{self.id}"

    @property
    def predicts_speed(self) -> bool:
        return self.target in SPEED_TARGETS


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    master_seed: int = 42
    past_steps: int = 18
    horizon_steps: int = 1
    train_config: TrainConfig = TrainConfig()
    turbine: TurbineSpec = TurbineSpec()
    max_workers: int = Field(default=1, ge=1)


class CaseResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    case_id: int
    mode: int
    kind: str
    seed: int
    native: Optional[MetricReport] = None
    power: Optional[MetricReport] = None
    model: Optional[TrainedModel] = Field(default=None, exclude=True)
    wall_time: float = Field(default=0.0, exclude=True)
    error: Optional[str] = None

    @model_validator(mode="after")
    def check_reports(self) -> "CaseResult":
        if self.error is None and (self.native is None or self.power is None):
            raise ValueError(f"case {self.case_id}: successful results carry both native and power reports")
        return self

    @property
    def ok(self) -> bool:
        return self.error is None


class SweepCell(BaseModel):
    model_config = ConfigDict(frozen=True)

    past_steps: int
    horizon_steps: int
    report: Optional[MetricReport] = None
    skipped: bool = False
    reason: Optional[str] = None


class SweepResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: str
    target: str
    cells: List[SweepCell]

    def cell(self, past_steps: int, horizon_steps: int) -> Optional[SweepCell]:
        for cell in self.cells:
            if cell.past_steps == past_steps and cell.horizon_steps == horizon_steps:
                return cell
        return None


class ImprovementStat(BaseModel):
    """Percent improvement in power-space RMSE of speed-output over power-output cases."""

    model_config = ConfigDict(frozen=True)

    per_kind: Dict[str, float]
    pooled: float
    speed_output_rmse: Dict[str, float]
    power_output_rmse: Dict[str, float]


class ComparisonRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    report: MetricReport
