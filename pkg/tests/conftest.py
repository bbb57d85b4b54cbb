import pytest
from typing import Generator
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from app.main import app
from app.schemas.mission import GPHyperparameters, MissionConfig, PlannerSettings, PrimitiveParameters
from app.services.dubins_motion import Bounds
from app.services.environment import Extent, synth_environment
from app.services.gp_model import GaussianProcess

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="module")
def client() -> Generator:
    """Create test client for the API"""
    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def workspace() -> Bounds:
    """The default 10 km x 10 km workspace"""
    return Bounds(0.0, 10.0, 0.0, 10.0)


@pytest.fixture
def primitives() -> PrimitiveParameters:
    return PrimitiveParameters()


@pytest.fixture
def small_planner() -> PlannerSettings:
    """A planner budget small enough for unit tests"""
    return PlannerSettings(budget=40, rollout_depth=2)


@pytest.fixture
def hyper() -> GPHyperparameters:
    return GPHyperparameters(signal_variance=1.0, length_scale=1.0, noise_variance=0.01)


@pytest.fixture
def fitted_gp(hyper) -> GaussianProcess:
    """GP conditioned on a handful of observations of a smooth field"""
    gen = np.random.default_rng(7)
    locations = gen.uniform(2.0, 8.0, size=(12, 2))
    values = np.sin(locations[:, 0]) + np.cos(0.5 * locations[:, 1])
    return GaussianProcess(hyper).fit(locations, values)


@pytest.fixture(scope="module")
def synth_grid():
    return synth_environment(3, Extent(0.0, 10.0, 0.0, 10.0), n_sources=3, width=30, height=30)


@pytest.fixture
def sample_grid_path() -> Path:
    return DATA_DIR / "sample_grid.csv"


@pytest.fixture
def quick_config() -> MissionConfig:
    """A short synthetic mission: three replans at most, tiny search"""
    return MissionConfig(
        environment="synth:4",
        grid_width=20,
        grid_height=20,
        sample_budget=30,
        planner=PlannerSettings(budget=20, rollout_depth=1),
        seed=11,
    )
