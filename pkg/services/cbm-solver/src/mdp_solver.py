"""
MDP Solver for discounted-cost Markov decision processes
Policy iteration, value iteration, policy evaluation and stationary analysis
over sparse (state, action) transition matrices
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.sparse.linalg import spsolve

from config import DIRECT_SOLVE_LIMIT, MAX_PI_ITERATIONS
from errors import ConvergenceError
from models import Action, PolicyClass, SystemState
from state_space import StateSpace

logger = logging.getLogger(__name__)

STATIONARY_TOLERANCE = 1e-10


@dataclass
class DiscountedMDP:
    """
    Flattened (state, action) pairs: pairs of state s occupy
    state_ptr[s]..state_ptr[s+1]-1, actions sorted lexicographically
    """

    discount: float
    state_ptr: np.ndarray
    actions: List[Action]
    costs: np.ndarray
    transitions: sp.csr_matrix
    epochs: Optional[np.ndarray] = None
    policy_class: Optional[PolicyClass] = None
    start_index: int = 0
    space: Optional[StateSpace] = None

    @classmethod
    def from_rows(
        cls,
        discount: float,
        rows: Sequence[Sequence[Tuple[Action, float, Dict[int, float]]]],
        **kwargs,
    ) -> "DiscountedMDP":
        """Build from per-state lists of (action, cost, {next state: probability})"""
        state_ptr = [0]
        actions: List[Action] = []
        costs: List[float] = []
        indices: List[int] = []
        data: List[float] = []
        indptr = [0]
        for state, choices in enumerate(rows):
            if not choices:
                raise ValueError(f"State {state} has no admissible action")
            for action, cost, entries in choices:
                actions.append(action)
                costs.append(cost)
                for target in sorted(entries):
                    indices.append(target)
                    data.append(entries[target])
                indptr.append(len(indices))
            state_ptr.append(len(actions))

        transitions = sp.csr_matrix(
            (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
            shape=(len(actions), len(rows)),
        )
        return cls(
            discount=discount,
            state_ptr=np.asarray(state_ptr, dtype=np.int64),
            actions=actions,
            costs=np.asarray(costs, dtype=float),
            transitions=transitions,
            **kwargs,
        )

    @property
    def n_states(self) -> int:
        return len(self.state_ptr) - 1

    @property
    def n_pairs(self) -> int:
        return len(self.actions)

    @property
    def action_counts(self) -> np.ndarray:
        return np.diff(self.state_ptr)

    def default_policy(self) -> np.ndarray:
        """Lexicographically first admissible action everywhere"""
        return self.state_ptr[:-1].copy()

    def policy_matrix(self, policy: np.ndarray) -> sp.csr_matrix:
        return self.transitions[policy]

    def policy_costs(self, policy: np.ndarray) -> np.ndarray:
        return self.costs[policy]

    def resolve_start(
        self, start_index: Optional[int] = None, start_state: Optional[SystemState] = None
    ) -> int:
        """Explicit index, else the index of start_state, else the canonical start"""
        if start_index is not None:
            return start_index
        if start_state is None:
            return self.start_index
        if self.space is None:
            raise ValueError("Model carries no state space to look up a start state")
        return self.space.index_of(SystemState(*start_state))

    def actions_of(self, policy: np.ndarray) -> List[Action]:
        return [self.actions[pair] for pair in policy]


@dataclass
class StationaryResult:
    pi: np.ndarray
    method: str
    residual: float


@dataclass
class ValueIterationResult:
    V: np.ndarray
    policy: np.ndarray
    iterations: int
    converged: bool
    last_update: float


@dataclass
class PolicySolution:
    """Solved policy with its values and stationary weights"""

    policy_class: Optional[PolicyClass]
    policy: np.ndarray
    actions: List[Action]
    V: np.ndarray
    pi: np.ndarray
    upsilon: float
    iterations: int
    converged: bool
    bellman_residual: float
    stationary_method: str
    stationary_residual: float

    @property
    def policy_map(self) -> Dict[int, Action]:
        return dict(enumerate(self.actions))


def closed_class_count(P: sp.spmatrix) -> int:
    """Number of strongly connected components that no transition leaves"""
    graph = sp.csr_matrix(P, copy=True)
    graph.eliminate_zeros()
    n_components, labels = connected_components(graph, directed=True, connection="strong")
    edges = graph.tocoo()
    leaving = labels[edges.row] != labels[edges.col]
    return n_components - len(np.unique(labels[edges.row[leaving]]))


def _solve_balance(P: sp.csr_matrix) -> Optional[Tuple[np.ndarray, float]]:
    """Direct solve of the normalized balance equations; None when singular"""
    n = P.shape[0]
    balance = (P.T - sp.identity(n, format="csr")).tocsr()
    system = sp.vstack([balance[:-1], sp.csr_matrix(np.ones((1, n)))]).tocsc()
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.atleast_1d(np.asarray(spsolve(system, rhs), dtype=float))
    except RuntimeError:
        return None
    if not np.all(np.isfinite(pi)) or pi.min() < -STATIONARY_TOLERANCE:
        return None
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.max(np.abs(P.T @ pi - pi)))
    if residual >= STATIONARY_TOLERANCE:
        return None
    return pi, residual


def relative_improvement(baseline: float, value: float) -> Optional[float]:
    """Percentage saving of value over baseline; None when baseline is 0"""
    if baseline == 0:
        return None
    return (baseline - value) / baseline * 100.0


def performance(solution: PolicySolution, cf_upsilon: Optional[float] = None) -> Tuple[float, Optional[float]]:
    """(upsilon, delta vs CF in percent)"""
    upsilon = float(solution.pi @ solution.V)
    if cf_upsilon is None:
        return upsilon, None
    return upsilon, relative_improvement(cf_upsilon, upsilon)


class MDPSolver:
    """
    Discounted-cost solver; minimization throughout
    """

    def __init__(
        self,
        max_iterations: int = MAX_PI_ITERATIONS,
        direct_solve_limit: int = DIRECT_SOLVE_LIMIT,
        evaluation_tolerance: float = 1e-10,
        improvement_tolerance: float = 1e-12,
        max_evaluation_iterations: int = 1_000_000,
    ):
        self.max_iterations = max_iterations
        self.direct_solve_limit = direct_solve_limit
        self.evaluation_tolerance = evaluation_tolerance
        self.improvement_tolerance = improvement_tolerance
        self.max_evaluation_iterations = max_evaluation_iterations

    def q_values(self, mdp: DiscountedMDP, V: np.ndarray) -> np.ndarray:
        return mdp.costs + mdp.discount * (mdp.transitions @ V)

    def bellman_update(self, mdp: DiscountedMDP, V: np.ndarray) -> np.ndarray:
        return np.minimum.reduceat(self.q_values(mdp, V), mdp.state_ptr[:-1])

    def bellman_residual(self, mdp: DiscountedMDP, V: np.ndarray) -> float:
        """max_s |V(s) - min_a {c + lambda P V}|"""
        return float(np.max(np.abs(V - self.bellman_update(mdp, V))))

    def greedy_policy(
        self, mdp: DiscountedMDP, V: np.ndarray, current: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """
        Greedy improvement: keep the current action when it is still
        minimal within tolerance, otherwise take the lexicographically
        lowest near-minimal action
        """
        q = self.q_values(mdp, V)
        starts = mdp.state_ptr[:-1]
        best = np.minimum.reduceat(q, starts)
        bound = best + self.improvement_tolerance * np.maximum(1.0, np.abs(best))
        near = q <= np.repeat(bound, mdp.action_counts)
        candidates = np.where(near, np.arange(mdp.n_pairs), mdp.n_pairs)
        greedy = np.minimum.reduceat(candidates, starts)
        if current is not None:
            greedy = np.where(near[current], current, greedy)
        return greedy

    def policy_evaluation(self, mdp: DiscountedMDP, policy: np.ndarray) -> np.ndarray:
        """Solve V = c + lambda P V for a fixed policy"""
        P = mdp.policy_matrix(policy)
        c = mdp.policy_costs(policy)
        n = mdp.n_states

        if n <= self.direct_solve_limit:
            system = (sp.identity(n, format="csc") - mdp.discount * P).tocsc()
            return np.atleast_1d(np.asarray(spsolve(system, c), dtype=float))

        V = np.zeros(n)
        residual = np.inf
        for iteration in range(1, self.max_evaluation_iterations + 1):
            updated = c + mdp.discount * (P @ V)
            residual = float(np.max(np.abs(updated - V)))
            V = updated
            if residual < self.evaluation_tolerance:
                logger.debug(f"Iterative evaluation converged after {iteration} sweeps")
                return V
        raise ConvergenceError(
            f"Policy evaluation did not converge, residual {residual:.3e}",
            residual=residual,
            iterations=self.max_evaluation_iterations,
        )

    def policy_iteration(
        self, mdp: DiscountedMDP, initial_policy: Optional[np.ndarray] = None
    ) -> PolicySolution:
        """Alternate exact evaluation and greedy improvement until stable"""
        policy = mdp.default_policy() if initial_policy is None else np.asarray(initial_policy).copy()
        converged = False
        iterations = 0
        V = np.zeros(mdp.n_states)

        while iterations < self.max_iterations:
            iterations += 1
            V = self.policy_evaluation(mdp, policy)
            improved = self.greedy_policy(mdp, V, current=policy)
            if np.array_equal(improved, policy):
                converged = True
                break
            policy = improved

        if not converged:
            V = self.policy_evaluation(mdp, policy)
        residual = self.bellman_residual(mdp, V)
        if not converged:
            logger.warning(
                f"Policy iteration stopped at {iterations} iterations without a stable policy "
                f"(Bellman residual {residual:.3e})"
            )

        stationary = self.stationary_distribution(mdp, policy, mdp.start_index)
        upsilon = float(stationary.pi @ V)
        logger.debug(f"Policy iteration: {iterations} iterations, upsilon={upsilon:.6f}")
        return PolicySolution(
            policy_class=mdp.policy_class,
            policy=policy,
            actions=mdp.actions_of(policy),
            V=V,
            pi=stationary.pi,
            upsilon=upsilon,
            iterations=iterations,
            converged=converged,
            bellman_residual=residual,
            stationary_method=stationary.method,
            stationary_residual=stationary.residual,
        )

    def value_iteration(
        self, mdp: DiscountedMDP, eps: float = 1e-6, max_iterations: int = 100_000
    ) -> ValueIterationResult:
        """Successive approximation from V = 0 with an eps-optimal stopping rule"""
        threshold = eps * (1.0 - mdp.discount) / (2.0 * mdp.discount)
        V = np.zeros(mdp.n_states)
        update = np.inf
        for iteration in range(1, max_iterations + 1):
            updated = self.bellman_update(mdp, V)
            update = float(np.max(np.abs(updated - V)))
            V = updated
            if update < threshold:
                return ValueIterationResult(
                    V=V,
                    policy=self.greedy_policy(mdp, V),
                    iterations=iteration,
                    converged=True,
                    last_update=update,
                )
        raise ConvergenceError(
            f"Value iteration did not converge in {max_iterations} iterations",
            residual=update,
            iterations=max_iterations,
        )

    def stationary_distribution(
        self, mdp: DiscountedMDP, policy: np.ndarray, start_index: int = 0
    ) -> StationaryResult:
        """
        Solve pi P = pi with one balance equation replaced by sum(pi) = 1.
        A chain with several closed classes has no unique solution; it gets
        the limit law from start_index, solved on the states reachable from
        there, with power iteration as the last resort
        """
        P = mdp.policy_matrix(policy).tocsr()
        P.eliminate_zeros()
        n = P.shape[0]

        n_closed = closed_class_count(P)
        if n_closed == 1:
            solved = _solve_balance(P)
            if solved is not None:
                return StationaryResult(pi=solved[0], method="direct", residual=solved[1])
            logger.warning("Stationary equations are singular, falling back to power iteration")
            return self._power_iteration(P, start_index)

        logger.info(f"Chain has {n_closed} closed classes, weighting from state {start_index}")
        reachable = np.sort(breadth_first_order(P, start_index, directed=True, return_predecessors=False))
        restricted = P[reachable][:, reachable].tocsr()
        if closed_class_count(restricted) == 1:
            solved = _solve_balance(restricted)
            if solved is not None:
                pi = np.zeros(n)
                pi[reachable] = solved[0]
                residual = float(np.max(np.abs(P.T @ pi - pi)))
                return StationaryResult(pi=pi, method="restricted", residual=residual)
        return self._power_iteration(P, start_index)

    def _power_iteration(
        self, P: sp.csr_matrix, start_index: int, max_iterations: int = 1_000_000
    ) -> StationaryResult:
        n = P.shape[0]
        transposed = P.T.tocsr()
        pi = np.zeros(n)
        pi[start_index] = 1.0
        residual = np.inf
        for _ in range(max_iterations):
            # lazy chain: same stationary law, no periodicity
            updated = 0.5 * pi + 0.5 * (transposed @ pi)
            updated /= updated.sum()
            pi = updated
            residual = float(np.max(np.abs(transposed @ pi - pi)))
            if residual < STATIONARY_TOLERANCE:
                return StationaryResult(pi=pi, method="power", residual=residual)
        raise ConvergenceError(
            f"Power iteration did not converge, residual {residual:.3e}",
            residual=residual,
            iterations=max_iterations,
        )
