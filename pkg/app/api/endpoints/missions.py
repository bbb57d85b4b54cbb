from fastapi import APIRouter
from typing import Any, Dict
import logging

from app.schemas.mission import MissionLog, config_from_mapping
from app.services.mission import run_mission

router = APIRouter()
logger = logging.getLogger(__name__)


@router.post("/run", response_model=MissionLog)
def run_mission_endpoint(body: Dict[str, Any]):
    """
    Run one mission synchronously and return its log.

    The body uses the flat config-file keys (e.g. `planner_budget`, `sample_budget`); nothing is
    written to disk.
    """
    config = config_from_mapping(body).model_copy(update={"output_dir": None})
    logger.info(f"Mission request: environment={config.environment} seed={config.seed}")
    return run_mission(config)
