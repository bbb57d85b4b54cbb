from pydantic import BaseModel, Field
from typing import List


class ParetoFrontRequest(BaseModel):
    vectors: List[List[float]] = Field(..., min_length=1, description="Reward vectors, all of one dimension")


class ParetoFrontResponse(BaseModel):
    indices: List[int] = Field(..., description="Ascending indices of the non-dominated vectors")
