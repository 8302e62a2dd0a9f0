import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from config import cost_setting  # noqa: E402
from instance_generator import build_params, generate_instance  # noqa: E402
from mdp_builder import MDPBuilder  # noqa: E402
from mdp_solver import MDPSolver  # noqa: E402
from models import CostParams, DegradationModel, GeneratorConfig, ModelParams, NetworkInstance  # noqa: E402


def make_params(
    R=((4.0, 7.0), (12.0, 3.0)),
    N: int = 2,
    K: int = 2,
    gamma: float = 0.5,
    costs: CostParams = None,
    discount: float = 0.95,
) -> ModelParams:
    instance = NetworkInstance(I=len(R), J=len(R[0]), R=R)
    return ModelParams(
        instance=instance,
        degradation=DegradationModel.uniform(N),
        K=K,
        gamma=gamma,
        discount=discount,
        costs=costs if costs is not None else cost_setting(1),
    )


def instance_params(seed: int, N: int = 2, rho: float = 1.0, setting: int = 1) -> ModelParams:
    """Randomly placed two-by-two network from the instance generator"""
    instance = generate_instance(GeneratorConfig(seed=seed))
    return build_params(instance, N, rho, 2, cost_setting(setting))


@pytest.fixture
def params() -> ModelParams:
    """Two warehouses, two machines, K=2, N=2, rho=1, cost setting 1: 270 states"""
    return make_params()


@pytest.fixture
def fast_params() -> ModelParams:
    """Same geometry with gamma=1 (rho=0.5)"""
    return make_params(gamma=1.0)


@pytest.fixture
def small_params() -> ModelParams:
    """Two warehouses, one machine, K=1: 24 states"""
    return make_params(R=((4.0,), (9.0,)), K=1, gamma=2.0)


@pytest.fixture(scope="module")
def default_builder() -> MDPBuilder:
    return MDPBuilder(make_params())


@pytest.fixture
def solver() -> MDPSolver:
    return MDPSolver()
