"""
Instance Generator for random service networks
Seeded placement of local warehouses and machines in a square, with the
response-time coverage constraints, plus load bookkeeping
"""

import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from errors import InstanceGenerationError
from models import (
    CostParams,
    DegradationModel,
    GeneratorConfig,
    LoadSpec,
    ModelParams,
    NetworkInstance,
)

logger = logging.getLogger(__name__)


class InstanceGenerator:
    """
    Draws whole placements uniformly on the square until every machine and
    every warehouse has a partner within t_star
    """

    def __init__(self, config: GeneratorConfig):
        self.config = config

    def _covered(self, R: np.ndarray) -> bool:
        t_star = self.config.t_star
        return bool((R.min(axis=0) <= t_star).all() and (R.min(axis=1) <= t_star).all())

    def generate(self) -> NetworkInstance:
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)

        for attempt in range(1, cfg.max_resamples + 1):
            warehouses = rng.uniform(0.0, cfg.square_side, size=(cfg.I, 2))
            machines = rng.uniform(0.0, cfg.square_side, size=(cfg.J, 2))
            R = cdist(warehouses, machines)
            if self._covered(R):
                logger.debug(f"Seed {cfg.seed}: placement accepted after {attempt} draws")
                return NetworkInstance(
                    seed=cfg.seed,
                    I=cfg.I,
                    J=cfg.J,
                    t_star=cfg.t_star,
                    square_side=cfg.square_side,
                    warehouses=tuple(map(tuple, warehouses.tolist())),
                    machines=tuple(map(tuple, machines.tolist())),
                    R=tuple(map(tuple, R.tolist())),
                )

        logger.warning(f"Seed {cfg.seed}: no feasible placement in {cfg.max_resamples} draws")
        raise InstanceGenerationError(
            f"No placement satisfies the coverage constraints after {cfg.max_resamples} draws",
            {"seed": cfg.seed, "square_side": cfg.square_side, "t_star": cfg.t_star},
        )


def generate_instance(cfg: GeneratorConfig) -> NetworkInstance:
    return InstanceGenerator(cfg).generate()


def gamma_from_load(spec: LoadSpec, J: int, N: int, K: int) -> float:
    """gamma = J / (N rho K)"""
    if min(J, N, K) < 1:
        raise ValueError("J, N and K must all be at least 1")
    return J / (N * spec.rho * K)


def load_from_gamma(gamma: float, J: int, N: int, K: int) -> float:
    """rho = J / (N gamma K)"""
    return J / (N * gamma * K)


def save_instance(instance: NetworkInstance, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(instance.model_dump_json(indent=2) + "\n")
    logger.info(f"Instance written to {path}")


def load_instance(path: Path) -> NetworkInstance:
    if not path.exists():
        raise FileNotFoundError(f"Instance file not found: {path}")
    return NetworkInstance.model_validate_json(path.read_text())


def build_params(
    instance: NetworkInstance,
    N: int,
    rho: float,
    K: int,
    costs: CostParams,
    discount: float = 0.95,
    mu: Optional[Sequence[float]] = None,
    alpha: Optional[Sequence[float]] = None,
) -> ModelParams:
    """Model parameters for an instance with gamma set from the load"""
    if mu is None and alpha is None:
        degradation = DegradationModel.uniform(N)
    else:
        default = DegradationModel.uniform(N)
        degradation = DegradationModel(
            N=N,
            mu=tuple(mu) if mu is not None else default.mu,
            alpha=tuple(alpha) if alpha is not None else default.alpha,
        )
    gamma = gamma_from_load(LoadSpec(rho=rho), instance.J, N, K)
    return ModelParams(
        instance=instance,
        degradation=degradation,
        K=K,
        gamma=gamma,
        discount=discount,
        costs=costs,
    )
