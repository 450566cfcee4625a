import math
from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

BETZ_LIMIT = 16.0 / 27.0


class TurbineSpec(BaseModel):
    """
    Turbine and site constants for height extrapolation and power conversion.
    Speeds in m/s at hub height, power in W. cp is derived from continuity at
    rated speed when not given explicitly.
    """

    model_config = ConfigDict(frozen=True)

    rotor_diameter: float = Field(default=150.0, gt=0.0)
    hub_height: float = Field(default=100.0, gt=0.0)
    anemometer_height: float = Field(default=3.8, gt=0.0)
    roughness_length: float = Field(default=0.0002, gt=0.0)
    air_density: float = Field(default=1.2, gt=0.0)
    cut_in: float = 3.0
    rated_speed: float = 12.4
    cut_out: float = 25.0
    rated_power: float = Field(default=8e6, gt=0.0)
    cp: Optional[float] = None

    @model_validator(mode="after")
    def check_bands(self) -> "TurbineSpec":
        if not 0 < self.cut_in < self.rated_speed < self.cut_out:
            raise ValueError("speeds must satisfy 0 < cut_in < rated_speed < cut_out")
        if self.cp is not None and not 0 < self.cp < BETZ_LIMIT:
            raise ValueError("cp must lie in (0, 16/27)")
        return self

    @property
    def swept_area(self) -> float:
        return math.pi * (self.rotor_diameter / 2.0) ** 2


class AnemometerBands(BaseModel):
    """Hub-height band edges mapped down to the anemometer height."""

    model_config = ConfigDict(frozen=True)

    start: float
    rated: float
    cutoff: float


class ConversionStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    fraction: float
    degenerate: bool = False
    sample_count: int
    band_fractions: Dict[str, float]
