"""
MDP Builder: assembles the sparse discounted MDP of one policy class
from the state space, the admissible actions and the transition engine
"""

import logging
import time
from typing import Dict, List, Optional

import numpy as np

from action_space import admissible_actions, closest_first_action, epoch_kind, immediate_cost
from errors import InvalidStateError
from mdp_solver import DiscountedMDP, MDPSolver, PolicySolution
from models import NO_ACTION, CostParams, EpochKind, ModelParams, PolicyClass
from state_space import StateSpace, canonical_state
from transition_engine import TransitionEngine

logger = logging.getLogger(__name__)


class MDPBuilder:
    """
    One state space and one transition engine per parameter set; cost
    variants share both since transition rows do not depend on costs
    """

    def __init__(
        self,
        params: ModelParams,
        space: Optional[StateSpace] = None,
        engine: Optional[TransitionEngine] = None,
    ):
        self.params = params
        self.space = space if space is not None else StateSpace.enumerate(params)
        self.engine = engine if engine is not None else TransitionEngine(params, self.space)
        self._epochs: Optional[np.ndarray] = None

    @classmethod
    def reachable(cls, params: ModelParams) -> "MDPBuilder":
        """Builder over the states reachable from the canonical state"""
        full = StateSpace.enumerate(params)
        engine = TransitionEngine(params, full)
        space = full.reachable_subspace(engine.full_successors)
        return cls(params, space)

    def with_costs(self, costs: CostParams) -> "MDPBuilder":
        builder = MDPBuilder(self.params.with_costs(costs), self.space, self.engine)
        builder._epochs = self._epochs
        return builder

    @property
    def canonical_index(self) -> int:
        try:
            return self.space.index_of(canonical_state(self.params))
        except InvalidStateError:
            return 0

    @property
    def epochs(self) -> np.ndarray:
        if self._epochs is None:
            self._epochs = np.array(
                [int(epoch_kind(state, self.params.N)) for state in self.space], dtype=np.int8
            )
        return self._epochs

    def build(self, cls: PolicyClass) -> DiscountedMDP:
        """Flatten admissible (state, action) pairs into cost vector and CSR rows"""
        rows = []
        for state in self.space:
            choices = []
            for action in admissible_actions(state, cls, self.params):
                row = self.engine.transition_row(state, action)
                choices.append((action, immediate_cost(state, action, self.params), row.entries))
            rows.append(choices)

        mdp = DiscountedMDP.from_rows(
            self.params.discount,
            rows,
            epochs=self.epochs,
            policy_class=cls,
            start_index=self.canonical_index,
            space=self.space,
        )
        logger.debug(f"Built {cls.value.upper()} model: {mdp.n_states} states, {mdp.n_pairs} pairs")
        return mdp

    def initial_policy(self, mdp: DiscountedMDP) -> np.ndarray:
        """CF action where admissible, else the lexicographically first action"""
        policy = mdp.default_policy()
        for index, state in enumerate(self.space):
            if epoch_kind(state, self.params.N) == EpochKind.FAILURE:
                preferred = closest_first_action(state, self.params)
            else:
                preferred = NO_ACTION
            start, stop = mdp.state_ptr[index], mdp.state_ptr[index + 1]
            for pair in range(start, stop):
                if mdp.actions[pair] == preferred:
                    policy[index] = pair
                    break
        return policy


def solve_policy_class(
    builder: MDPBuilder, solver: MDPSolver, cls: PolicyClass
) -> PolicySolution:
    """Optimal policy of one class by policy iteration from the CF-compatible start"""
    try:
        started = time.perf_counter()
        mdp = builder.build(cls)
        solution = solver.policy_iteration(mdp, builder.initial_policy(mdp))
        logger.info(
            f"Solved {cls.value.upper()}: {mdp.n_states} states, {solution.iterations} iterations, "
            f"upsilon={solution.upsilon:.6f} ({time.perf_counter() - started:.2f}s)"
        )
        return solution
    except Exception as e:
        logger.error(f"Error solving policy class {cls.value}: {str(e)}")
        raise


def solve_classes(
    builder: MDPBuilder, solver: MDPSolver, classes: List[PolicyClass]
) -> Dict[PolicyClass, PolicySolution]:
    """Solve several classes on one builder, CF first when requested"""
    ordered = sorted(set(classes), key=list(PolicyClass).index)
    return {cls: solve_policy_class(builder, solver, cls) for cls in ordered}
