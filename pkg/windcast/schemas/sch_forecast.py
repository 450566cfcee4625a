from typing import Any, Dict, List

from pydantic import BaseModel, Field


class PredictRequest(BaseModel):
    model: Dict[str, Any] = Field(description="Saved model document")
    # One (P x F) window or a batch of them.
    inputs: List[Any]


class PredictResponse(BaseModel):
    kind: str
    target_feature: str
    predictions: List[float]
