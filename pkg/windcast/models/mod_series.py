from datetime import datetime, timedelta
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

# Numeric meteorological fields carried by a record, in file order.
MET_FIELDS: Tuple[str, ...] = ("wdir", "wspd", "gst", "pres", "atmp", "wtmp", "dewp")


class FieldFlag(str, Enum):
    OBSERVED = "observed"
    IMPUTED = "imputed"
    MISSING = "missing"


class MetRecord(BaseModel):
    """One timestamped buoy observation. Missing values are None."""

    model_config = ConfigDict(frozen=True)

    timestamp: datetime
    wdir: Optional[float] = None
    wspd: Optional[float] = None
    gst: Optional[float] = None
    pres: Optional[float] = None
    atmp: Optional[float] = None
    wtmp: Optional[float] = None
    dewp: Optional[float] = None
    field_flags: Dict[str, FieldFlag]

    @model_validator(mode="after")
    def check_flags(self) -> "MetRecord":
        if set(self.field_flags) != set(MET_FIELDS):
            raise ValueError("every field must carry exactly one flag")
        for name in MET_FIELDS:
            value = getattr(self, name)
            flag = self.field_flags[name]
            if (value is None) != (flag == FieldFlag.MISSING):
                raise ValueError(f"{name}: value presence does not match flag {flag.value}")
        if self.field_flags["wspd"] == FieldFlag.OBSERVED and self.wspd < 0:
            raise ValueError("observed wspd must be >= 0")
        if self.field_flags["gst"] == FieldFlag.OBSERVED and self.gst < 0:
            raise ValueError("observed gst must be >= 0")
        if self.field_flags["wdir"] == FieldFlag.OBSERVED and not 0 <= self.wdir < 360:
            raise ValueError("observed wdir must be in [0, 360)")
        return self

    def flag(self, name: str) -> FieldFlag:
        return self.field_flags[name]


class RepairEntry(BaseModel):
    """One synthetic row or value produced while repairing a series."""

    model_config = ConfigDict(frozen=True)

    index: int
    timestamp: datetime
    field: str  # "*" for a whole inserted row or a dropped duplicate
    action: Literal["inserted", "interpolated", "forward_filled", "back_filled", "duplicate_dropped"]


VALUE_ACTIONS = ("interpolated", "forward_filled", "back_filled")


class SeriesDataset(BaseModel):
    """An ordered, cadence-complete series of records."""

    model_config = ConfigDict(frozen=True)

    station_id: str = "unknown"
    cadence: timedelta = timedelta(minutes=10)
    records: Tuple[MetRecord, ...]
    repair_log: Tuple[RepairEntry, ...] = ()

    @model_validator(mode="after")
    def check_grid(self) -> "SeriesDataset":
        if self.cadence <= timedelta(0):
            raise ValueError("cadence must be positive")
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.timestamp - prev.timestamp != self.cadence:
                raise ValueError(
                    f"records at {prev.timestamp.isoformat()} and {cur.timestamp.isoformat()} "
                    f"are not one cadence apart"
                )
        return self

    def __len__(self) -> int:
        return len(self.records)

    @property
    def first_timestamp(self) -> datetime:
        return self.records[0].timestamp

    @property
    def last_timestamp(self) -> datetime:
        return self.records[-1].timestamp

    def column(self, name: str) -> np.ndarray:
        """Float column with NaN where the value is missing."""
        field = name.lower()
        return np.array(
            [np.nan if getattr(r, field) is None else getattr(r, field) for r in self.records],
            dtype=float,
        )

    def flags(self, name: str) -> List[FieldFlag]:
        field = name.lower()
        return [r.field_flags[field] for r in self.records]

    def to_frame(self) -> pd.DataFrame:
        """Upper-case column names (WSPD, GST, ...) indexed by timestamp."""
        frame = pd.DataFrame(
            {name.upper(): self.column(name) for name in MET_FIELDS},
            index=pd.DatetimeIndex([r.timestamp for r in self.records], name="timestamp"),
        )
        return frame


class FieldSummary(BaseModel):
    missing_fraction: float
    imputed_fraction: float


class IngestSummary(BaseModel):
    station_id: str
    row_count: int
    first_timestamp: datetime
    last_timestamp: datetime
    span: timedelta
    inserted_rows: int
    row_imputed_fraction: float
    imputed_values: int
    duplicates_dropped: int
    fields: Dict[str, FieldSummary]
