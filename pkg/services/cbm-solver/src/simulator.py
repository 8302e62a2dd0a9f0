"""
Policy Simulator: Monte Carlo oracle for discounted costs
Runs the uniformized chain under a fixed policy, independently of the
linear-algebra solver, and counts maintenance events along the way
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from mdp_solver import DiscountedMDP
from models import EpochKind, SimConfig

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["step", "state_index", "action_x", "action_y", "action_z", "cost", "discounted_cost"]
COUNT_NAMES = ("failures", "preventive_replacements", "central_dispatches", "relocations")


def default_horizon(discount: float, c_max: float, budget: float) -> int:
    """Smallest t with discount^t * c_max / (1 - discount) below the budget"""
    if c_max <= 0:
        return 1
    tail = c_max / (1.0 - discount)
    horizon = max(1, math.ceil(math.log(budget / tail) / math.log(discount)))
    while discount ** horizon * tail >= budget:
        horizon += 1
    return horizon


@dataclass
class SimulationResult:
    mean: float
    halfwidth_95: float
    horizon_steps: int
    totals: np.ndarray
    counts: Dict[str, np.ndarray] = field(default_factory=dict)
    trace: Optional[pd.DataFrame] = None

    @property
    def mean_counts(self) -> Dict[str, float]:
        return {name: float(values.mean()) for name, values in self.counts.items()}

    def contains(self, value: float) -> bool:
        return abs(value - self.mean) <= self.halfwidth_95


class PolicySimulator:
    """
    Vectorized over replications; replication r draws from its own
    generator spawned from (seed, r), so results do not depend on blocking
    """

    BLOCK_SIZE = 1024

    def __init__(self, mdp: DiscountedMDP, policy: np.ndarray):
        self.mdp = mdp
        self.policy = np.asarray(policy)
        matrix = mdp.policy_matrix(self.policy).tocsr()
        matrix.sort_indices()
        self.indptr = matrix.indptr
        self.indices = matrix.indices
        self.cumulative = np.cumsum(matrix.data)
        self.costs = mdp.policy_costs(self.policy)
        self.flags = self._event_flags()

    def _event_flags(self) -> Dict[str, np.ndarray]:
        """Per-state 0/1 indicators of each counted event under the policy"""
        chosen = np.array([self.mdp.actions[pair] for pair in self.policy], dtype=np.int64).reshape(-1, 3)
        if self.mdp.epochs is None:
            epochs = np.full(self.mdp.n_states, int(EpochKind.REPLENISHMENT))
        else:
            epochs = np.asarray(self.mdp.epochs)
        return {
            "failures": (epochs == EpochKind.FAILURE).astype(np.int64),
            "preventive_replacements": ((epochs == EpochKind.DEGRADATION) & (chosen[:, 0] >= 0)).astype(np.int64),
            "central_dispatches": (chosen[:, 0] == 0).astype(np.int64),
            "relocations": (chosen[:, 1] >= 1).astype(np.int64),
        }

    def _sample(self, states: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
        """Inverse-CDF draw of each successor from a shared cumulative array"""
        start = self.indptr[states]
        stop = self.indptr[states + 1]
        base = np.where(start > 0, self.cumulative[start - 1], 0.0)
        target = base + uniforms * (self.cumulative[stop - 1] - base)
        position = np.searchsorted(self.cumulative, target, side="right")
        return self.indices[np.clip(position, start, stop - 1)]

    def run(
        self, cfg: SimConfig, start_index: Optional[int] = None, record_trace: bool = False
    ) -> SimulationResult:
        """Replications start from start_index, else cfg.start_state, else the canonical state"""
        start_index = self.mdp.resolve_start(start_index, cfg.start_state)
        horizon = cfg.horizon_steps or default_horizon(
            self.mdp.discount, float(self.mdp.costs.max(initial=0.0)), cfg.truncation_budget
        )
        discounts = self.mdp.discount ** np.arange(horizon)
        streams = np.random.SeedSequence(cfg.seed).spawn(cfg.replications)

        totals = np.zeros(cfg.replications)
        counts = {name: np.zeros(cfg.replications, dtype=np.int64) for name in COUNT_NAMES}
        trace_rows: List[tuple] = []

        for first in range(0, cfg.replications, self.BLOCK_SIZE):
            block = streams[first:first + self.BLOCK_SIZE]
            window = slice(first, first + len(block))
            uniforms = np.stack([np.random.default_rng(stream).random(horizon) for stream in block])
            states = np.full(len(block), start_index, dtype=np.int64)

            for step in range(horizon):
                step_costs = self.costs[states]
                totals[window] += discounts[step] * step_costs
                for name in COUNT_NAMES:
                    counts[name][window] += self.flags[name][states]
                if record_trace and first == 0:
                    state = int(states[0])
                    x, y, z = self.mdp.actions[self.policy[state]]
                    trace_rows.append(
                        (step, state, x, y, z, float(step_costs[0]), float(discounts[step] * step_costs[0]))
                    )
                states = self._sample(states, uniforms[:, step])

        mean = float(totals.mean())
        halfwidth = 0.0
        if cfg.replications > 1:
            halfwidth = float(1.96 * totals.std(ddof=1) / math.sqrt(cfg.replications))

        logger.info(
            f"Simulated {cfg.replications} replications x {horizon} steps: "
            f"mean={mean:.6f} +/- {halfwidth:.6f}"
        )
        trace = pd.DataFrame(trace_rows, columns=TRACE_COLUMNS) if record_trace else None
        return SimulationResult(
            mean=mean,
            halfwidth_95=halfwidth,
            horizon_steps=horizon,
            totals=totals,
            counts=counts,
            trace=trace,
        )


def simulate_discounted_cost(
    mdp: DiscountedMDP, policy: np.ndarray, cfg: SimConfig, start_index: Optional[int] = None
) -> SimulationResult:
    """Sample mean and 95% halfwidth of the discounted cost from the resolved start"""
    return PolicySimulator(mdp, policy).run(cfg, start_index)


def trajectory_stats(
    mdp: DiscountedMDP, policy: np.ndarray, cfg: SimConfig, start_index: Optional[int] = None
) -> Dict[str, np.ndarray]:
    """Per-replication counts of failures, preventive replacements, central dispatches and relocations"""
    return simulate_discounted_cost(mdp, policy, cfg, start_index).counts


def write_trace(trace: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    trace.to_csv(path, index=False, float_format="%.10g")
    logger.info(f"Trace with {len(trace)} steps written to {path}")
