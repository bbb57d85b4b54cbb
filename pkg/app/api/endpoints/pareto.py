from fastapi import APIRouter
import logging

from app.schemas.pareto import ParetoFrontRequest, ParetoFrontResponse
from app.services.pareto_core import pareto_front

router = APIRouter()
logger = logging.getLogger(__name__)


@router.post("/front", response_model=ParetoFrontResponse)
def compute_front(request: ParetoFrontRequest):
    """Non-dominated subset of the posted vectors."""
    indices = pareto_front(request.vectors)
    logger.info(f"Pareto front: {indices.size} of {len(request.vectors)} vectors")
    return ParetoFrontResponse(indices=[int(i) for i in indices])
