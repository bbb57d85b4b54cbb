"""
Dominance relations on reward vectors and Pareto (non-dominated) set construction.

All comparisons are strict `>` / `>=` on raw doubles; any epsilon policy belongs to the caller.
Pareto sets are index-level: equal vectors that are non-dominated are all kept, so a planner can
still pick any of several tied children.
"""
import math
from typing import Sequence, Union

import numpy as np

from app.core.exceptions import DimensionMismatchError, EmptyInputError

VectorLike = Union[Sequence[float], np.ndarray]


def as_reward_vector(values: VectorLike) -> np.ndarray:
    """Coerce to a 1-D float array with at least one objective."""
    vector = np.asarray(values, dtype=float)
    if vector.ndim != 1 or vector.size == 0:
        raise DimensionMismatchError(f"reward vector must be 1-D and non-empty, got shape {vector.shape}")
    return vector


def _pair(a: VectorLike, b: VectorLike):
    a = as_reward_vector(a)
    b = as_reward_vector(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.size} vs {b.size}")
    return a, b


def dominates(a: VectorLike, b: VectorLike) -> bool:
    """True iff a is no worse than b in every objective and strictly better in one."""
    a, b = _pair(a, b)
    return bool(np.all(a >= b) and np.any(a > b))


def weakly_dominates(a: VectorLike, b: VectorLike) -> bool:
    a, b = _pair(a, b)
    return bool(np.all(a >= b))


def incomparable(a: VectorLike, b: VectorLike) -> bool:
    """True iff each vector is strictly better than the other in some objective."""
    a, b = _pair(a, b)
    return bool(np.any(a > b) and np.any(a < b))


def non_dominated_by(a: VectorLike, b: VectorLike) -> bool:
    a, b = _pair(a, b)
    return bool(np.any(a > b))


def pareto_front(vectors: Union[Sequence[VectorLike], np.ndarray]) -> np.ndarray:
    """
    Indices of the vectors that no other vector dominates.

    Args:
        vectors: N reward vectors of a common dimension D (an (N, D) array works too;
            a flat sequence of scalars is read as D=1).
    Returns:
        np.ndarray: Sorted int indices of the non-dominated members; duplicates are all retained.
    Raises:
        EmptyInputError: no vectors.
        DimensionMismatchError: ragged input.
    """
    if len(vectors) == 0:
        raise EmptyInputError("pareto_front needs at least one vector")
    try:
        points = np.asarray(vectors, dtype=float)
    except ValueError as e:
        raise DimensionMismatchError(f"vectors have different dimensions: {e}") from e
    if points.ndim == 1:
        # a flat sequence of scalars is a D=1 set
        points = points[:, None]
    if points.ndim != 2 or points.shape[1] == 0:
        raise DimensionMismatchError(f"expected an (N, D) set of vectors, got shape {points.shape}")

    # dominated[i, j]: points[j] dominates points[i]
    no_worse = np.all(points[None, :, :] >= points[:, None, :], axis=2)
    better = np.any(points[None, :, :] > points[:, None, :], axis=2)
    dominated = np.any(no_worse & better, axis=1)
    return np.flatnonzero(~dominated)


def true_pareto_set(means: Union[Sequence[VectorLike], np.ndarray]) -> np.ndarray:
    """Pareto optimal arms (or children) in terms of expected reward."""
    return pareto_front(means)


def confidence_radius(total: int, count: Union[int, np.ndarray], n_objectives: int) -> Union[float, np.ndarray]:
    """Shared Pareto-UCB radius sqrt((4 ln n + ln D) / (2 n_k))."""
    numerator = 4.0 * math.log(total) + math.log(n_objectives)
    return np.sqrt(numerator / (2.0 * np.asarray(count, dtype=float)))


def ucb_vectors(cumulative: np.ndarray, counts: np.ndarray, total: int, n_objectives: int) -> np.ndarray:
    """
    Pareto-UCB vectors: the average reward of each option plus the same radius on every component.

    Args:
        cumulative: (K, D) cumulative reward vectors.
        counts: (K,) selection counts, all >= 1.
        total: total selections n at the parent (>= 1).
        n_objectives: D.
    Returns:
        np.ndarray: (K, D) upper confidence vectors.
    """
    cumulative = np.asarray(cumulative, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if cumulative.ndim != 2 or cumulative.shape[0] != counts.shape[0]:
        raise DimensionMismatchError(
            f"cumulative rewards {cumulative.shape} do not match counts {counts.shape}"
        )
    radius = confidence_radius(total, counts, n_objectives)
    return cumulative / counts[:, None] + radius[:, None]
