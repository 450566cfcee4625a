from fastapi import APIRouter, Depends, HTTPException

from windcast.dependencies.dep_turbine import get_turbine
from windcast.models.mod_turbine import TurbineSpec
from windcast.schemas.sch_physics import BandsResponse, ConvertRequest, ConvertResponse
from windcast.services.svc_physics import PhysicsService
from windcast.validators.val_errors import WindcastError

router = APIRouter(
    prefix="/physics",
    tags=["Physics"],
    responses={422: {"description": "Invalid input"}},
)


@router.post("/convert", response_model=ConvertResponse)
def convert(request: ConvertRequest, turbine: TurbineSpec = Depends(get_turbine)):
    """
    Extrapolate a measured speed to hub height and read the power curve.
    """
    try:
        return PhysicsService.convert_reading(request.speed, request.height, turbine)
    except WindcastError as e:
        raise HTTPException(status_code=422, detail=e.to_dict())


@router.get("/bands", response_model=BandsResponse)
def bands(turbine: TurbineSpec = Depends(get_turbine)):
    """Cut-in, rated and cut-out speeds as seen by the anemometer."""
    try:
        thresholds = PhysicsService.speed_band_at_anemometer(turbine)
        return BandsResponse(
            anemometer_height=turbine.anemometer_height,
            hub_height=turbine.hub_height,
            ratio=PhysicsService.hub_ratio(turbine),
            start=thresholds.start,
            rated=thresholds.rated,
            cutoff=thresholds.cutoff,
            cp=PhysicsService.cp_of(turbine),
        )
    except WindcastError as e:
        raise HTTPException(status_code=422, detail=e.to_dict())
