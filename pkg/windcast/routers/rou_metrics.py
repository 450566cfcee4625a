from fastapi import APIRouter, HTTPException

from windcast.models.mod_metrics import MetricReport
from windcast.schemas.sch_metrics import EvaluateRequest
from windcast.services.svc_metrics import MetricsService
from windcast.validators.val_errors import WindcastError

router = APIRouter(
    prefix="/metrics",
    tags=["Metrics"],
    responses={422: {"description": "Invalid input"}},
)


@router.post("/evaluate", response_model=MetricReport)
def evaluate(request: EvaluateRequest):
    """
    MAE, RMSE, MAPE, SMAPE and R2 of a forecast against its targets.

    - MAPE leaves out zero targets and reports how many
    - R2 is null for constant targets
    """
    try:
        return MetricsService.evaluate(request.y_true, request.y_pred)
    except WindcastError as e:
        raise HTTPException(status_code=422, detail=e.to_dict())
