from pydantic import BaseModel, Field


class ConvertRequest(BaseModel):
    speed: float = Field(ge=0.0, description="Measured wind speed in m/s")
    height: float = Field(default=3.8, gt=0.0, description="Measurement height in m")


class ConvertResponse(BaseModel):
    speed: float
    height: float
    hub_height: float
    hub_speed: float
    power_w: float
    power_mw: float
    band: str


class BandsResponse(BaseModel):
    anemometer_height: float
    hub_height: float
    ratio: float
    start: float
    rated: float
    cutoff: float
    cp: float
