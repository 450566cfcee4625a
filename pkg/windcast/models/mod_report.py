from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

# Metrics where a smaller raw value is better; plotted inverted.
ERROR_METRICS = ("MAE", "RMSE", "MAPE", "SMAPE")
RADAR_AXES: Tuple[str, ...] = ("MAE", "RMSE", "MAPE", "SMAPE", "R2")


class RadarEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    values: Tuple[float, ...]


class RadarChart(BaseModel):
    """Per-axis min-max normalized polygons; larger is better on every axis."""

    model_config = ConfigDict(frozen=True)

    title: str = ""
    axes: Tuple[str, ...]
    entries: Tuple[RadarEntry, ...]
    flagged_axes: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def check_chart(self) -> "RadarChart":
        if len(self.axes) < 3:
            raise ValueError("a radar chart needs at least 3 axes")
        for entry in self.entries:
            if len(entry.values) != len(self.axes):
                raise ValueError(f"entry {entry.label} does not cover every axis")
            if any(not 0.0 <= v <= 1.0 for v in entry.values):
                raise ValueError(f"entry {entry.label} has values outside [0, 1]")
        return self

    @property
    def labels(self) -> List[str]:
        return [entry.label for entry in self.entries]
