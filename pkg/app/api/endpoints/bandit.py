from fastapi import APIRouter
import numpy as np
import logging

from app.schemas.bandit import BanditRunRequest, BanditRunResponse
from app.services.bandit_lab import BanditArm, run_experiment

router = APIRouter()
logger = logging.getLogger(__name__)


@router.post("/run", response_model=BanditRunResponse)
def run_bandit(request: BanditRunRequest):
    """
    Run a seeded bandit experiment and summarize it.

    Args:
        request: arm means, horizon, trials, seed, arm kind and policy

    Returns:
        Final and checkpoint pull counts plus early/late failure frequencies
    """
    arms = [BanditArm(true_mean=np.asarray(mean), kind=request.kind) for mean in request.means]
    result = run_experiment(
        arms, request.horizon, request.trials, request.seed, policy=request.policy, n_jobs=1
    )
    window = max(1, request.horizon // 10)
    return BanditRunResponse(
        optimal_arms=[int(k) for k in result.optimal_arms],
        final_counts=np.mean([t.final_counts for t in result.trials], axis=0).tolist(),
        checkpoint_counts={
            n: np.mean([t.checkpoint_counts[n] for t in result.trials], axis=0).tolist()
            for n in result.checkpoints
        },
        early_failure_frequency=float(np.mean([t.failure_frequency(0, window) for t in result.trials])),
        late_failure_frequency=float(
            np.mean([t.failure_frequency(request.horizon - window, request.horizon) for t in result.trials])
        ),
    )
