"""
Pareto Monte Carlo tree search over Dubins primitive actions.

Each iteration selects down the tree with Pareto-UCB, expands one untried primitive, rolls out random
primitives, and backs the summed reward vector up to the root. The returned action is the most
visited root child. A single-objective reward spec gives the scalar baselines ("information MCTS"
with variance reduction, "UCB MCTS" with the UCB-replanning reward) on the same machinery.

Rewards of one trajectory are evaluated together: variance rewards see noisy fantasies at every
earlier sample of the same trajectory, value rewards read the real posterior only. Raw path rewards
are mapped to [0, 1] per objective by the running min/max seen during the search. An iteration is
rewarded for the expanded primitive and its rollout only, so deep subtrees do not collect larger
rewards than shallow ones.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from app.core.exceptions import NoFeasiblePrimitiveError, SelectionContractError
from app.schemas.mission import ObjectiveKind, PlannerSettings, PrimitiveParameters, SelectionRule
from app.services.dubins_motion import Bounds, Pose, PrimitivePath, primitive_library
from app.services.gp_model import GaussianProcess
from app.services.pareto_core import confidence_radius, pareto_front, ucb_vectors

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RewardSpec:
    """
    Objective list plus the parameters the rewards need.

    `scales` multiplies raw rewards per objective before normalization (1.0 by default).
    """
    objectives: Tuple[ObjectiveKind, ...]
    beta0: float = 1.0
    mission_time: int = 0
    scales: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not self.objectives:
            raise ValueError("a reward spec needs at least one objective")
        if self.scales is not None and (
            len(self.scales) != len(self.objectives) or any(s <= 0 for s in self.scales)
        ):
            raise ValueError("scales must be positive, one per objective")

    @property
    def dimension(self) -> int:
        return len(self.objectives)

    @property
    def beta(self) -> float:
        """UCB-replanning weight β_t = β₀·sqrt(ln(1 + t))."""
        return self.beta0 * math.sqrt(math.log1p(self.mission_time))


class RewardNormalizer:
    """Per-objective running min/max; values seen before min < max map to 0.5."""

    def __init__(self, n_objectives: int):
        self.low = np.full(n_objectives, np.inf)
        self.high = np.full(n_objectives, -np.inf)

    def observe(self, raw: np.ndarray) -> None:
        raw = np.atleast_2d(raw)
        self.low = np.minimum(self.low, raw.min(axis=0))
        self.high = np.maximum(self.high, raw.max(axis=0))

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        span = self.high - self.low
        ready = span > 0
        scaled = np.divide(raw - self.low, np.where(ready, span, 1.0))
        return np.where(ready, scaled, 0.5)


def trajectory_rewards(paths: Sequence[PrimitivePath], gp: GaussianProcess, spec: RewardSpec) -> np.ndarray:
    """
    Raw reward vectors, one row per path, for paths executed in order.

    variance_reduction sums the posterior variance of each sample given fantasies at every earlier
    sample of the trajectory; value_sum sums posterior means; ucb_replanning sums μ + β_t·σ.
    """
    counts = [path.sample_count for path in paths]
    if not paths:
        return np.zeros((0, spec.dimension))
    points = np.vstack([path.measurement_points for path in paths])
    bounds = np.concatenate([[0], np.cumsum(counts)])

    columns = {}
    if ObjectiveKind.VARIANCE_REDUCTION in spec.objectives:
        columns[ObjectiveKind.VARIANCE_REDUCTION] = gp.sequential_variance(points)
    if ObjectiveKind.VALUE_SUM in spec.objectives or ObjectiveKind.UCB_REPLANNING in spec.objectives:
        mean, var = gp.predict_many(points)
        columns[ObjectiveKind.VALUE_SUM] = mean
        columns[ObjectiveKind.UCB_REPLANNING] = mean + spec.beta * np.sqrt(var)

    per_sample = np.column_stack([columns[kind] for kind in spec.objectives])
    rewards = np.array([per_sample[bounds[i]:bounds[i + 1]].sum(axis=0) for i in range(len(paths))])
    if spec.scales is not None:
        rewards = rewards * np.asarray(spec.scales, dtype=float)
    return rewards


def raw_path_reward(
    path: PrimitivePath, gp: GaussianProcess, spec: RewardSpec, prefix: Sequence[PrimitivePath] = ()
) -> np.ndarray:
    """Raw reward of `path` when executed after `prefix` in the same trajectory."""
    return trajectory_rewards(list(prefix) + [path], gp, spec)[-1]


def path_reward(
    path: PrimitivePath,
    gp: GaussianProcess,
    spec: RewardSpec,
    normalizer: RewardNormalizer,
    prefix: Sequence[PrimitivePath] = (),
) -> np.ndarray:
    """Normalized reward of one path; the normalizer sees the raw value first."""
    raw = raw_path_reward(path, gp, spec, prefix)
    normalizer.observe(raw)
    return normalizer.normalize(raw)


@dataclass(eq=False)
class TreeNode:
    """Search-tree node: state, incoming action, visit count n, cumulative reward X, children."""
    state: Pose
    n_objectives: int
    action: Optional[PrimitivePath] = None
    parent: Optional["TreeNode"] = None
    samples_from_root: int = 0
    n: int = 0
    X: np.ndarray = None
    children: List["TreeNode"] = field(default_factory=list)
    actions: List[PrimitivePath] = field(default_factory=list)
    untried: List[int] = field(default_factory=list)
    terminal: bool = False

    def __post_init__(self):
        if self.X is None:
            self.X = np.zeros(self.n_objectives)

    @property
    def action_index(self) -> int:
        return self.action.index if self.action is not None else -1

    @property
    def fully_expanded(self) -> bool:
        return not self.untried

    def trajectory(self) -> List[PrimitivePath]:
        """Actions from the root down to this node."""
        actions = []
        node = self
        while node.parent is not None:
            actions.append(node.action)
            node = node.parent
        return actions[::-1]

    def iter_nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children)


def _child_statistics(node: TreeNode) -> Tuple[np.ndarray, np.ndarray, int]:
    counts = np.array([child.n for child in node.children], dtype=float)
    if counts.size == 0 or np.any(counts < 1):
        raise SelectionContractError("best-child selection reached an unvisited child")
    cumulative = np.stack([child.X for child in node.children])
    return cumulative, counts, int(counts.sum())


def pareto_best_child(
    node: TreeNode, n_objectives: int, preference: Optional[int], rng: np.random.Generator
) -> TreeNode:
    """
    Child chosen from the Pareto front of the children's UCB vectors.

    With `preference` = objective index d, the front member with the largest d-th UCB component
    (first on ties); otherwise a uniformly random front member.
    """
    cumulative, counts, total = _child_statistics(node)
    bounds = ucb_vectors(cumulative, counts, total, n_objectives)
    front = pareto_front(bounds)
    if preference is not None:
        return node.children[int(front[np.argmax(bounds[front, preference])])]
    return node.children[int(front[rng.integers(front.size)])]


def scalar_best_child(node: TreeNode, rng: np.random.Generator) -> TreeNode:
    """Scalar UCB (bias sqrt(4 ln n / (2 n_k))) on objective 0, random among exact ties."""
    cumulative, counts, total = _child_statistics(node)
    scores = cumulative[:, 0] / counts + confidence_radius(total, counts, 1)
    ties = np.flatnonzero(scores == scores.max())
    return node.children[int(ties[rng.integers(ties.size)])]


def backpropagate(leaf: TreeNode, reward: np.ndarray) -> None:
    """Add one visit and the reward vector to every node from the leaf up to the root."""
    node = leaf
    while node is not None:
        node.n += 1
        node.X = node.X + reward
        node = node.parent


def most_visited_child(root: TreeNode) -> TreeNode:
    """Highest visit count; ties go to the lowest primitive index."""
    if not root.children:
        raise NoFeasiblePrimitiveError("the root has no expanded children")
    return min(root.children, key=lambda child: (-child.n, child.action_index))


class ParetoMCTS:
    """
    One search tree over primitive actions.

    Args:
        gp: environment model (read-only during the search).
        spec: reward objectives.
        planner: iteration budget, rollout depth, selection rule.
        primitives: primitive fan parameters.
        bounds: workspace rectangle.
        rng: generator for expansion, rollouts and front choices.
        remaining_samples: samples left in the mission; nodes whose root path reaches it are terminal.
        preference: objective index to prefer inside Pareto fronts, or None.
    """

    def __init__(
        self,
        gp: GaussianProcess,
        spec: RewardSpec,
        planner: PlannerSettings,
        primitives: PrimitiveParameters,
        bounds: Bounds,
        rng: np.random.Generator,
        remaining_samples: Optional[int] = None,
        preference: Optional[int] = None,
    ):
        if preference is not None and not 0 <= preference < spec.dimension:
            raise ValueError(f"preference index {preference} outside 0..{spec.dimension - 1}")
        self.gp = gp
        self.spec = spec
        self.settings = planner
        self.library = primitive_library(primitives)
        self.bounds = bounds
        self.rng = rng
        self.remaining_samples = remaining_samples
        self.preference = preference
        self.normalizer = RewardNormalizer(spec.dimension)
        self.root: Optional[TreeNode] = None

    @property
    def n_objectives(self) -> int:
        return self.spec.dimension

    def _is_exhausted(self, samples: int) -> bool:
        return self.remaining_samples is not None and samples >= self.remaining_samples

    def _make_node(self, state: Pose, parent: Optional[TreeNode] = None,
                   action: Optional[PrimitivePath] = None) -> TreeNode:
        samples = (parent.samples_from_root if parent else 0) + (action.sample_count if action else 0)
        node = TreeNode(
            state=state, n_objectives=self.n_objectives, action=action, parent=parent, samples_from_root=samples
        )
        if self._is_exhausted(samples):
            node.terminal = True
            return node
        try:
            node.actions = self.library.at(state, self.bounds)
        except NoFeasiblePrimitiveError:
            if parent is None:
                raise
            node.terminal = True
            return node
        node.untried = list(range(len(node.actions)))
        return node

    def best_child(self, node: TreeNode) -> TreeNode:
        if self.settings.selection_rule == SelectionRule.SCALAR_UCB:
            return scalar_best_child(node, self.rng)
        return pareto_best_child(node, self.n_objectives, self.preference, self.rng)

    def selection(self, root: TreeNode) -> TreeNode:
        """Descend through fully expanded nodes until an expandable or terminal node."""
        node = root
        while not node.terminal and node.fully_expanded and node.children:
            node = self.best_child(node)
        return node

    def expansion(self, node: TreeNode) -> TreeNode:
        """Pop a uniformly random untried action and attach the child at its end pose."""
        position = int(self.rng.integers(len(node.untried)))
        action = node.actions[node.untried.pop(position)]
        child = self._make_node(action.end, parent=node, action=action)
        node.children.append(child)
        node.children.sort(key=lambda c: c.action_index)
        return child

    def rollout_actions(self, state: Pose, depth_max: int, remaining: Optional[int] = None) -> List[PrimitivePath]:
        """Up to depth_max uniformly random feasible primitives, stopping when the sample budget runs out."""
        paths = []
        pose = state
        for _ in range(depth_max):
            if remaining is not None and remaining <= 0:
                break
            try:
                options = self.library.at(pose, self.bounds)
            except NoFeasiblePrimitiveError:
                break
            path = options[int(self.rng.integers(len(options)))]
            paths.append(path)
            pose = path.end
            if remaining is not None:
                remaining -= path.sample_count
        return paths

    def _score(self, context: Sequence[PrimitivePath], scored: Sequence[PrimitivePath]) -> np.ndarray:
        """
        Summed normalized reward of `scored` executed after `context`.

        Context paths only condition the variance fantasies; their own rows are neither observed
        nor rewarded, so the reward of one iteration never grows with the depth of its leaf.
        """
        if not scored:
            return np.zeros(self.n_objectives)
        raw = trajectory_rewards(list(context) + list(scored), self.gp, self.spec)[len(context):]
        self.normalizer.observe(raw)
        return self.normalizer.normalize(raw).sum(axis=0)

    def simulate(
        self,
        state: Pose,
        depth_max: Optional[int] = None,
        prefix: Sequence[PrimitivePath] = (),
        remaining: Optional[int] = None,
    ) -> np.ndarray:
        """Summed normalized reward of a random rollout from `state` (zero vector for depth 0)."""
        depth = self.settings.rollout_depth if depth_max is None else depth_max
        rollout = self.rollout_actions(state, depth, remaining)
        return self._score(prefix, rollout)

    def iterate(self, root: TreeNode) -> np.ndarray:
        """
        One selection, expansion, simulation and backpropagation step.

        The reward covers the leaf's incoming primitive plus the rollout from the leaf; the earlier
        tree path is fantasy context only.
        """
        leaf = self.selection(root)
        if not leaf.terminal and leaf.untried:
            leaf = self.expansion(leaf)
        trajectory = leaf.trajectory()
        context, edge = trajectory[:-1], trajectory[-1:]
        remaining = None if self.remaining_samples is None else self.remaining_samples - leaf.samples_from_root
        rollout = [] if leaf.terminal else self.rollout_actions(leaf.state, self.settings.rollout_depth, remaining)
        reward = self._score(context, edge + rollout)
        backpropagate(leaf, reward)
        return reward

    def search(self, root_state: Pose) -> PrimitivePath:
        """
        Run the iteration budget from `root_state` and return the most visited root action.

        Raises:
            NoFeasiblePrimitiveError: no primitive from the root stays inside the workspace.
        """
        self.root = self._make_node(root_state)
        if self.root.terminal:
            raise NoFeasiblePrimitiveError("the mission sample budget is already exhausted")
        if self.settings.budget < len(self.root.actions):
            logger.warning(
                f"Planner budget {self.settings.budget} is below the {len(self.root.actions)} root actions; "
                f"some actions will never be evaluated"
            )
        for _ in range(self.settings.budget):
            self.iterate(self.root)
        best = most_visited_child(self.root)
        logger.debug(
            f"Search from ({root_state.x:.2f}, {root_state.y:.2f}): action {best.action_index} "
            f"with {best.n}/{self.root.n} visits"
        )
        return best.action


def search(
    root_state: Pose,
    gp: GaussianProcess,
    spec: RewardSpec,
    planner: PlannerSettings,
    primitives: PrimitiveParameters,
    bounds: Bounds,
    rng: np.random.Generator,
    remaining_samples: Optional[int] = None,
    preference: Optional[int] = None,
) -> PrimitivePath:
    """Functional entry point: build a ParetoMCTS and search once."""
    return ParetoMCTS(gp, spec, planner, primitives, bounds, rng, remaining_samples, preference).search(root_state)
