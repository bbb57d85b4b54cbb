from fastapi import APIRouter
from app.api.endpoints import bandit, missions, pareto

api_router = APIRouter()

api_router.include_router(pareto.router, prefix="/pareto", tags=["pareto"])
api_router.include_router(bandit.router, prefix="/bandit", tags=["bandit"])
api_router.include_router(missions.router, prefix="/missions", tags=["missions"])
