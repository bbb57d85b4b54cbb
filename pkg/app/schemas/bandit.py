from pydantic import BaseModel, Field
from typing import Dict, List, Literal


class BanditRunRequest(BaseModel):
    means: List[List[float]] = Field(..., min_length=1, description="Expected reward vector of each arm, components in [0, 1]")
    horizon: int = Field(1000, ge=1, le=1_000_000)
    trials: int = Field(1, ge=1, le=100)
    seed: int = Field(0, ge=0)
    kind: Literal["bernoulli", "deterministic"] = "bernoulli"
    policy: Literal["pareto_ucb", "scalar_ucb"] = "pareto_ucb"


class BanditRunResponse(BaseModel):
    optimal_arms: List[int]
    final_counts: List[float] = Field(..., description="Per-arm pull counts averaged over trials")
    checkpoint_counts: Dict[int, List[float]] = Field(..., description="Per-arm mean pull counts at each checkpoint")
    early_failure_frequency: float = Field(..., description="Mean frequency of non-Pareto pulls over the first tenth of the horizon")
    late_failure_frequency: float = Field(..., description="Mean frequency of non-Pareto pulls over the last tenth of the horizon")
