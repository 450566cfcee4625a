from typing import List

from pydantic import BaseModel, Field


class EvaluateRequest(BaseModel):
    y_true: List[float] = Field(min_length=1)
    y_pred: List[float] = Field(min_length=1)
