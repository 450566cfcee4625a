from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Fixed field order for CSV rows and JSON objects.
REPORT_FIELDS: Tuple[str, ...] = ("n", "mae", "rmse", "mape", "mape_excluded", "smape", "r2")

# Unit of each metric, written into output headers.
METRIC_UNITS: Dict[str, str] = {
    "mae": "target units",
    "rmse": "target units",
    "mape": "percent",
    "smape": "percent",
    "r2": "dimensionless",
}


class MetricReport(BaseModel):
    """
    Forecast-evaluation metrics. mape is None when every target is zero;
    r2 is None when the targets are constant.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    mae: float
    rmse: float
    mape: Optional[float]
    mape_excluded: int = 0
    smape: float
    r2: Optional[float]

    @model_validator(mode="after")
    def check_bounds(self) -> "MetricReport":
        if self.mae > self.rmse * (1 + 1e-12) + 1e-300:
            raise ValueError("mae must not exceed rmse")
        if not 0.0 <= self.smape <= 200.0 + 1e-9:
            raise ValueError("smape must lie in [0, 200]")
        if self.r2 is not None and self.r2 > 1.0 + 1e-12:
            raise ValueError("r2 must not exceed 1")
        return self

    @property
    def r2_defined(self) -> bool:
        return self.r2 is not None

    def metric(self, name: str) -> Optional[float]:
        return getattr(self, name.lower())

    def as_row(self) -> Dict[str, Optional[float]]:
        return {name: getattr(self, name) for name in REPORT_FIELDS}
