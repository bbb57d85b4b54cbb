"""
Gaussian-process regression over the scalar environment field.

Fixed squared-exponential kernel (signal variance, length-scale, noise variance), zero prior mean
on standardized targets, and a cached lower Cholesky factor of (K + noise·I). Models are immutable:
fit and fantasy updates return new models, so one model can be read concurrently during a search.
"""
from typing import Optional, Sequence, Tuple, Union
import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from sklearn.gaussian_process.kernels import RBF, ConstantKernel

from app.core.exceptions import DimensionMismatchError, FactorizationError, NonFiniteInputError
from app.schemas.mission import GPHyperparameters

logger = logging.getLogger(__name__)

ArrayLike = Union[Sequence[Sequence[float]], np.ndarray]

JITTER_SCALE = 1e-10
MAX_JITTER_DOUBLINGS = 8


def _as_locations(locations: ArrayLike) -> np.ndarray:
    points = np.asarray(locations, dtype=float)
    if points.size == 0:
        return np.empty((0, 2))
    if points.ndim == 1:
        points = points[None, :]
    if points.ndim != 2 or points.shape[1] != 2:
        raise DimensionMismatchError(f"locations must be (m, 2), got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise NonFiniteInputError("locations contain NaN or infinite coordinates")
    return points


def cholesky_with_jitter(matrix: np.ndarray, signal_variance: float) -> np.ndarray:
    """
    Lower Cholesky factor, adding 1e-10·σ_f² (doubling up to 8 times) to the diagonal on failure.

    Raises:
        FactorizationError: still not positive definite after the last doubling.
    """
    if matrix.shape[0] == 0:
        return np.empty((0, 0))
    jitter = 0.0
    for attempt in range(MAX_JITTER_DOUBLINGS + 2):
        try:
            return cholesky(matrix + jitter * np.eye(matrix.shape[0]), lower=True, check_finite=False)
        except LinAlgError:
            jitter = JITTER_SCALE * signal_variance if attempt == 0 else jitter * 2.0
            logger.debug(f"Cholesky failed, retrying with jitter {jitter:.3g}")
    raise FactorizationError(
        f"covariance of size {matrix.shape[0]} is not positive definite after {MAX_JITTER_DOUBLINGS} jitter doublings"
    )


class GaussianProcess:
    """
    Posterior Gaussian process over a 2-D workspace.

    Build the prior with `GaussianProcess(hyper)` and condition with `fit`; every conditioning call
    returns a new model.
    """

    def __init__(
        self,
        hyper: Optional[GPHyperparameters] = None,
        locations: Optional[np.ndarray] = None,
        values: Optional[np.ndarray] = None,
        factor: Optional[np.ndarray] = None,
    ):
        self.hyper = hyper or GPHyperparameters()
        self.kernel = ConstantKernel(self.hyper.signal_variance, constant_value_bounds="fixed") * RBF(
            length_scale=self.hyper.length_scale, length_scale_bounds="fixed"
        )
        self.locations = np.empty((0, 2)) if locations is None else locations
        self.values = np.empty(0) if values is None else values
        if factor is None:
            factor = cholesky_with_jitter(self._train_covariance(self.locations), self.hyper.signal_variance)
        self._factor = factor
        self._alpha = cho_solve((factor, True), self.values, check_finite=False) if self.size else np.empty(0)

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def signal_variance(self) -> float:
        return self.hyper.signal_variance

    def _train_covariance(self, locations: np.ndarray) -> np.ndarray:
        if locations.shape[0] == 0:
            return np.empty((0, 0))
        return self.kernel(locations) + self.hyper.noise_variance * np.eye(locations.shape[0])

    def fit(self, locations: ArrayLike, values: Sequence[float]) -> "GaussianProcess":
        """
        Condition the prior on exactly these observations (keeping the newest max_points).

        Raises:
            DimensionMismatchError: location and value counts differ.
            NonFiniteInputError: non-finite inputs.
            FactorizationError: factorization fails after maximum jitter.
        """
        points = _as_locations(locations)
        targets = np.asarray(values, dtype=float).reshape(-1)
        if points.shape[0] != targets.size:
            raise DimensionMismatchError(f"{points.shape[0]} locations but {targets.size} values")
        if not np.all(np.isfinite(targets)):
            raise NonFiniteInputError("values contain NaN or infinite entries")
        cap = self.hyper.max_points
        if targets.size > cap:
            logger.debug(f"Training set capped: dropping {targets.size - cap} oldest observations")
            points, targets = points[-cap:], targets[-cap:]
        return GaussianProcess(self.hyper, points.copy(), targets.copy())

    def prior(self) -> "GaussianProcess":
        return GaussianProcess(self.hyper)

    def predict_many(self, locations: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior means and variances (clamped at 0) at m query locations."""
        queries = _as_locations(locations)
        if queries.shape[0] == 0:
            return np.empty(0), np.empty(0)
        prior_var = np.full(queries.shape[0], self.hyper.signal_variance)
        if self.size == 0:
            return np.zeros(queries.shape[0]), prior_var
        cross = self.kernel(self.locations, queries)
        mean = cross.T @ self._alpha
        v = solve_triangular(self._factor, cross, lower=True, check_finite=False)
        var = prior_var - np.sum(v * v, axis=0)
        return mean, np.maximum(var, 0.0)

    def predict(self, location: Sequence[float]) -> Tuple[float, float]:
        """Posterior (mean, variance) at one location."""
        mean, var = self.predict_many(location)
        if mean.size != 1:
            raise DimensionMismatchError("predict takes exactly one location; use predict_many")
        return float(mean[0]), float(var[0])

    def posterior_covariance(self, locations: ArrayLike) -> np.ndarray:
        queries = _as_locations(locations)
        prior = self.kernel(queries) if queries.shape[0] else np.empty((0, 0))
        if self.size == 0 or queries.shape[0] == 0:
            return prior
        v = solve_triangular(self._factor, self.kernel(self.locations, queries), lower=True, check_finite=False)
        return prior - v.T @ v

    def sequential_variance(self, locations: ArrayLike) -> np.ndarray:
        """
        Variance at each location after noisy fantasies at all preceding locations.

        Equals calling fantasy_update on locations[:j] and predicting at locations[j], computed in one
        Cholesky of the joint posterior covariance plus noise.
        """
        queries = _as_locations(locations)
        if queries.shape[0] == 0:
            return np.empty(0)
        noise = self.hyper.noise_variance
        joint = self.posterior_covariance(queries) + noise * np.eye(queries.shape[0])
        factor = cholesky_with_jitter(joint, self.hyper.signal_variance)
        return np.maximum(np.diag(factor) ** 2 - noise, 0.0)

    def fantasize(self, locations: ArrayLike) -> "GaussianProcess":
        """
        Condition on hypothetical observations whose targets equal the current posterior mean.

        The Cholesky factor is extended block-wise instead of refactorized.
        """
        points = _as_locations(locations)
        if points.shape[0] == 0:
            return self
        mean, _ = self.predict_many(points)
        new_block = self.kernel(points) + self.hyper.noise_variance * np.eye(points.shape[0])
        if self.size == 0:
            factor = cholesky_with_jitter(new_block, self.hyper.signal_variance)
        else:
            cross = solve_triangular(
                self._factor, self.kernel(self.locations, points), lower=True, check_finite=False
            )
            corner = cholesky_with_jitter(new_block - cross.T @ cross, self.hyper.signal_variance)
            n, m = self.size, points.shape[0]
            factor = np.zeros((n + m, n + m))
            factor[:n, :n] = self._factor
            factor[n:, :n] = cross.T
            factor[n:, n:] = corner
        return GaussianProcess(
            self.hyper,
            np.vstack([self.locations, points]),
            np.concatenate([self.values, mean]),
            factor=factor,
        )

    def fantasy_update(self, location: Sequence[float]) -> "GaussianProcess":
        """Condition on one hypothetical observation at `location` (target = posterior mean)."""
        return self.fantasize(np.asarray(location, dtype=float).reshape(1, 2))
