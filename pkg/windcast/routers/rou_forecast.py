import numpy as np
from fastapi import APIRouter, HTTPException
from pydantic import ValidationError

from windcast.schemas.sch_forecast import PredictRequest, PredictResponse
from windcast.services.svc_models import ModelService
from windcast.validators.val_errors import WindcastError

router = APIRouter(
    prefix="/forecast",
    tags=["Forecast"],
    responses={422: {"description": "Invalid input"}},
)


@router.post("/predict", response_model=PredictResponse)
def predict(request: PredictRequest):
    """
    Run a saved model on one window or a batch of windows.
    """
    try:
        model = ModelService.from_document(request.model)
        predictions = ModelService.predict(model, np.asarray(request.inputs, dtype=float))
    except WindcastError as e:
        raise HTTPException(status_code=422, detail=e.to_dict())
    except (KeyError, ValidationError, ValueError) as e:
        raise HTTPException(status_code=422, detail={"code": "invalid_model_file", "message": str(e)})
    return PredictResponse(
        kind=model.kind_name,
        target_feature=model.spec.target_feature,
        predictions=predictions.tolist(),
    )
