"""
Multi-objective multi-armed bandit lab.

Runs the Pareto-UCB policy (pull every arm once, then pick uniformly inside the Pareto front of the
upper-confidence vectors) on stationary arms with rewards in [0, 1] per objective, and measures
the quantities the policy's guarantees talk about: pull counts of sub-optimal arms at geometric
checkpoints and the windowed frequency of choosing an arm outside the true Pareto set.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, EmptyInputError
from app.services.pareto_core import confidence_radius, dominates, pareto_front, true_pareto_set, ucb_vectors

logger = logging.getLogger(__name__)

ARM_KINDS = ("bernoulli", "deterministic")
TRACE_SCHEMA_HEADER = "#pareto-mcts-bandit v1"


@dataclass(frozen=True)
class BanditArm:
    """A stationary arm with expected reward vector `true_mean` (each component in [0, 1])."""
    true_mean: np.ndarray
    kind: str = "bernoulli"

    def __post_init__(self):
        mean = np.asarray(self.true_mean, dtype=float)
        if mean.ndim != 1 or mean.size == 0:
            raise DimensionMismatchError(f"arm mean must be a non-empty vector, got shape {mean.shape}")
        if np.any(mean < 0.0) or np.any(mean > 1.0):
            raise ValueError(f"arm mean {mean.tolist()} leaves the [0, 1] reward support")
        if self.kind not in ARM_KINDS:
            raise ValueError(f"unknown arm kind {self.kind!r}; expected one of {ARM_KINDS}")
        object.__setattr__(self, "true_mean", mean)

    @property
    def dimension(self) -> int:
        return int(self.true_mean.size)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one reward vector; Bernoulli arms draw each objective independently."""
        if self.kind == "deterministic":
            return self.true_mean.copy()
        return (rng.random(self.dimension) < self.true_mean).astype(float)


@dataclass
class PullLedger:
    """Per-arm counts T_k(n), cumulative reward vectors and the total step n."""
    counts: np.ndarray
    cumulative: np.ndarray
    step: int = 0

    @classmethod
    def empty(cls, n_arms: int, n_objectives: int) -> "PullLedger":
        if n_arms < 1:
            raise EmptyInputError("a bandit needs at least one arm")
        return cls(
            counts=np.zeros(n_arms, dtype=np.int64),
            cumulative=np.zeros((n_arms, n_objectives), dtype=float),
        )

    @property
    def n_arms(self) -> int:
        return int(self.counts.size)

    def record(self, arm: int, reward: np.ndarray) -> None:
        self.counts[arm] += 1
        self.cumulative[arm] += reward
        self.step += 1

    def averages(self) -> np.ndarray:
        """Average reward per arm; rows of unpulled arms are zero."""
        safe = np.maximum(self.counts, 1)
        return self.cumulative / safe[:, None]


def policy_step(ledger: PullLedger, n_objectives: int, rng: np.random.Generator) -> int:
    """
    Pareto-UCB arm choice.

    Pulls the lowest-index unpulled arm during initialization; afterwards builds the Pareto front of
    the upper-confidence vectors and returns a uniformly random member.
    """
    unpulled = np.flatnonzero(ledger.counts == 0)
    if unpulled.size:
        return int(unpulled[0])
    bounds = ucb_vectors(ledger.cumulative, ledger.counts, ledger.step, n_objectives)
    front = pareto_front(bounds)
    return int(front[rng.integers(front.size)])


def scalar_ucb_step(ledger: PullLedger, rng: np.random.Generator) -> int:
    """
    Scalar UCB on objective 0 with bias sqrt(4 ln n / (2 n_k)).

    Ties are broken uniformly with the same draw pattern as policy_step, so a D=1 run of both
    consumes the generator identically.
    """
    unpulled = np.flatnonzero(ledger.counts == 0)
    if unpulled.size:
        return int(unpulled[0])
    counts = ledger.counts.astype(float)
    scores = ledger.cumulative[:, 0] / counts + confidence_radius(ledger.step, counts, 1)
    ties = np.flatnonzero(scores == scores.max())
    return int(ties[rng.integers(ties.size)])


def most_dominant_optimal(
    k: int,
    front: Sequence[int],
    means: Union[Sequence[Sequence[float]], np.ndarray],
) -> Tuple[int, np.ndarray]:
    """
    The optimal arm farthest from sub-optimal arm k, and the gap vector to it.

    For each k' in the front, eps_k' = min_d (mu_k',d - mu_k,d); k* maximizes eps_k' (first index on ties)
    and the gap is mu_k* - mu_k.

    Raises:
        EmptyInputError: empty front.
        ValueError: a front member does not dominate arm k.
    """
    means = np.asarray(means, dtype=float)
    front = [int(i) for i in front]
    if not front:
        raise EmptyInputError("most_dominant_optimal needs a non-empty front")
    for member in front:
        if not dominates(means[member], means[k]):
            raise ValueError(f"arm {member} does not dominate arm {k}")
    margins = np.array([np.min(means[member] - means[k]) for member in front])
    best = front[int(np.argmax(margins))]
    return best, means[best] - means[k]


@dataclass
class TrialTrace:
    """One trial: the chosen arm and reward per step plus checkpoint counts."""
    trial: int
    n_arms: int
    arms: np.ndarray
    rewards: np.ndarray
    in_front: np.ndarray
    checkpoint_counts: Dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def final_counts(self) -> np.ndarray:
        return np.bincount(self.arms, minlength=self.n_arms)

    def failure_frequency(self, start: int, stop: int) -> float:
        """Frequency of picking an arm outside P* over steps [start, stop) (0-based)."""
        window = ~self.in_front[start:stop]
        return float(window.mean()) if window.size else 0.0


@dataclass
class ExperimentResult:
    horizon: int
    checkpoints: List[int]
    optimal_arms: np.ndarray
    trials: List[TrialTrace]

    def mean_checkpoint_ratio(self, arm: int) -> Dict[int, float]:
        """Mean over trials of T_arm(n) / n at every checkpoint."""
        return {
            n: float(np.mean([trace.checkpoint_counts[n][arm] for trace in self.trials])) / n
            for n in self.checkpoints
        }


def geometric_checkpoints(horizon: int, base: int = 10) -> List[int]:
    """Powers of `base` up to the horizon, plus the horizon itself."""
    points = []
    value = base
    while value < horizon:
        points.append(value)
        value *= base
    points.append(horizon)
    return points


def _run_trial(
    trial: int,
    arms: Sequence[BanditArm],
    horizon: int,
    seed_sequence: np.random.SeedSequence,
    checkpoints: Sequence[int],
    optimal: np.ndarray,
    policy: str,
) -> TrialTrace:
    reward_seq, policy_seq = seed_sequence.spawn(2)
    reward_rng = np.random.default_rng(reward_seq)
    policy_rng = np.random.default_rng(policy_seq)
    n_objectives = arms[0].dimension
    ledger = PullLedger.empty(len(arms), n_objectives)
    is_optimal = np.zeros(len(arms), dtype=bool)
    is_optimal[optimal] = True

    chosen = np.empty(horizon, dtype=np.int64)
    rewards = np.empty((horizon, n_objectives), dtype=float)
    wanted = set(checkpoints)
    snapshots = {}
    for t in range(horizon):
        if policy == "scalar_ucb":
            arm = scalar_ucb_step(ledger, policy_rng)
        else:
            arm = policy_step(ledger, n_objectives, policy_rng)
        reward = arms[arm].sample(reward_rng)
        ledger.record(arm, reward)
        chosen[t] = arm
        rewards[t] = reward
        if ledger.step in wanted:
            snapshots[ledger.step] = ledger.counts.copy()

    trace = TrialTrace(
        trial=trial,
        n_arms=len(arms),
        arms=chosen,
        rewards=rewards,
        in_front=is_optimal[chosen],
        checkpoint_counts=snapshots,
    )
    return trace


def run_experiment(
    arms: Sequence[BanditArm],
    horizon: int,
    trials: int,
    seed: int,
    checkpoints: Optional[Sequence[int]] = None,
    policy: str = "pareto_ucb",
    n_jobs: Optional[int] = None,
) -> ExperimentResult:
    """
    Run independent seeded trials of the bandit policy.

    Args:
        arms: the arms; all share one reward dimension.
        horizon: steps per trial (>= number of arms).
        trials: number of trials (>= 1).
        seed: root seed; per-trial generators are spawned from it, so results do not depend on n_jobs.
        checkpoints: steps at which pull counts are snapshotted (default: powers of ten and the horizon).
        policy: "pareto_ucb" or "scalar_ucb".
        n_jobs: joblib workers (default settings.N_JOBS).
    Returns:
        ExperimentResult with one TrialTrace per trial.
    """
    if len(arms) == 0:
        raise EmptyInputError("run_experiment needs at least one arm")
    dims = {arm.dimension for arm in arms}
    if len(dims) != 1:
        raise DimensionMismatchError(f"arms disagree on reward dimension: {sorted(dims)}")
    if horizon < len(arms):
        raise ValueError(f"horizon {horizon} is shorter than the {len(arms)} initialization pulls")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if policy not in ("pareto_ucb", "scalar_ucb"):
        raise ValueError(f"unknown policy {policy!r}")

    checkpoints = sorted(set(checkpoints)) if checkpoints else geometric_checkpoints(horizon)
    checkpoints = [n for n in checkpoints if 1 <= n <= horizon]
    optimal = true_pareto_set(np.stack([arm.true_mean for arm in arms]))
    children = np.random.SeedSequence(seed).spawn(trials)

    logger.info(
        f"Bandit experiment: {len(arms)} arms, D={dims.pop()}, horizon={horizon}, "
        f"trials={trials}, seed={seed}, policy={policy}"
    )
    traces = Parallel(n_jobs=n_jobs or settings.N_JOBS)(
        delayed(_run_trial)(i, arms, horizon, children[i], checkpoints, optimal, policy)
        for i in range(trials)
    )
    return ExperimentResult(horizon=horizon, checkpoints=checkpoints, optimal_arms=optimal, trials=list(traces))


def log_growth_fit(checkpoints: Sequence[int], counts: Sequence[float]) -> Tuple[float, float]:
    """Least-squares fit counts ≈ a + b·ln n; returns (a, b)."""
    slope, intercept = np.polyfit(np.log(np.asarray(checkpoints, dtype=float)), np.asarray(counts, dtype=float), 1)
    return float(intercept), float(slope)


def load_arms(path: Union[str, Path]) -> List[BanditArm]:
    """
    Read arms from a CSV with one row per arm, one column per objective and an optional `kind` column.
    """
    frame = pd.read_csv(path, comment="#")
    kinds = frame.pop("kind") if "kind" in frame.columns else pd.Series(["bernoulli"] * len(frame))
    if frame.empty or frame.shape[1] == 0:
        raise EmptyInputError(f"no arms found in {path}")
    return [
        BanditArm(true_mean=row.to_numpy(dtype=float), kind=str(kind))
        for (_, row), kind in zip(frame.iterrows(), kinds)
    ]


def write_trace_csv(result: ExperimentResult, path: Union[str, Path]) -> Path:
    """
    Write every step of every trial: trial, step, arm, reward components, in_front flag.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frames = []
    for trace in result.trials:
        frame = pd.DataFrame({
            "trial": trace.trial,
            "step": np.arange(1, trace.arms.size + 1),
            "arm": trace.arms,
        })
        for d in range(trace.rewards.shape[1]):
            frame[f"reward_{d}"] = trace.rewards[:, d]
        frame["in_front"] = trace.in_front.astype(int)
        frames.append(frame)
    with open(path, "w", newline="") as handle:
        handle.write(TRACE_SCHEMA_HEADER + "\n")
        pd.concat(frames, ignore_index=True).to_csv(
            handle, index=False, float_format=settings.CSV_FLOAT_FORMAT
        )
    logger.info(f"Bandit trace written to {path}")
    return path


def checkpoint_table(result: ExperimentResult) -> pd.DataFrame:
    """Mean pull count and pull ratio of every arm at every checkpoint, with the arm's P* membership."""
    optimal = set(int(k) for k in result.optimal_arms)
    rows = []
    for n in result.checkpoints:
        counts = np.mean([trace.checkpoint_counts[n] for trace in result.trials], axis=0)
        for arm, count in enumerate(counts):
            rows.append({"step": n, "arm": arm, "mean_count": count, "ratio": count / n, "optimal": int(arm in optimal)})
    return pd.DataFrame(rows)
