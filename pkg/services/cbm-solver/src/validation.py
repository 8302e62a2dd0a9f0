"""
Invariant suite for one CBM model
Structural checks on action spaces and transitions, a cross-check of the
generic event generator against the four transition families written out
case by case, and solver checks across the policy classes
"""

import logging
from typing import Callable, Dict, List, Tuple

import numpy as np

from action_space import (
    admissible_actions,
    closest_first_action,
    epoch_kind,
    immediate_cost,
    post_action_state,
)
from mdp_builder import MDPBuilder, solve_policy_class
from mdp_solver import MDPSolver, PolicySolution
from models import (
    NO_ACTION,
    Action,
    CheckResult,
    EpochKind,
    ModelParams,
    PolicyClass,
    SystemState,
    ValidationReport,
)
from transition_engine import RATE_TOLERANCE

logger = logging.getLogger(__name__)

DOMINANCE_TOLERANCE = 1e-8
RESIDUAL_TOLERANCE = 1e-8
AGREEMENT_TOLERANCE = 1e-6

# (smaller class, larger class): V of the larger class is componentwise below
DOMINANCE_PAIRS = [
    (PolicyClass.OC, PolicyClass.CF),
    (PolicyClass.OCR, PolicyClass.OC),
    (PolicyClass.OCPR, PolicyClass.OCR),
    (PolicyClass.OCP, PolicyClass.OC),
    (PolicyClass.OCPR, PolicyClass.OCP),
]


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise AssertionError(message)


def _replace(vector: Tuple[int, ...], position: int, value: int) -> Tuple[int, ...]:
    """vector with the 1-based position set to value; position 0 or -1 is a no-op"""
    if position < 1:
        return vector
    items = list(vector)
    items[position - 1] = value
    return tuple(items)


def _add(vector: Tuple[int, ...], position: int, amount: int) -> Tuple[int, ...]:
    if position < 1:
        return vector
    return _replace(vector, position, vector[position - 1] + amount)


def _machine_events(
    F: Tuple[int, ...], P: Tuple[int, ...], C: Tuple[int, ...], params: ModelParams, skip: int = 0
) -> Dict[SystemState, float]:
    """Failure, degradation and repair rates of every machine except skip"""
    alpha, mu, N = params.degradation.alpha, params.degradation.mu, params.N
    rates: Dict[SystemState, float] = {}
    for l, c in enumerate(C, start=1):
        if l == skip:
            continue
        if c > 0:
            rates[SystemState(F, P, _replace(C, l, 0), l)] = alpha[c] * mu[c]
        if c > 1:
            rates[SystemState(F, P, _replace(C, l, c - 1), l)] = (1 - alpha[c]) * mu[c]
        if c == 0:
            rates[SystemState(F, P, _replace(C, l, N), l)] = mu[0]
    return rates


def _replenishments(
    F: Tuple[int, ...], P: Tuple[int, ...], C: Tuple[int, ...], gamma: float
) -> Dict[SystemState, float]:
    return {
        SystemState(_add(F, k, 1), _add(P, k, -1), C, 0): P[k - 1] * gamma
        for k in range(1, len(P) + 1)
        if P[k - 1] > 0
    }


def literal_rates(state: SystemState, action: Action, params: ModelParams, tau: float) -> Dict[SystemState, float]:
    """
    Transition rates written out per transition family, dummy rate from
    its closed form; zero rates are dropped
    """
    F, P, C, j = state
    x, y, z = action
    mu, N, gamma = params.degradation.mu, params.N, params.gamma
    rates: Dict[SystemState, float] = {}

    def merge(extra: Dict[SystemState, float]) -> None:
        for target, rate in extra.items():
            rates[target] = rates.get(target, 0.0) + rate

    if j == 0:
        # replenishment epoch, do nothing
        merge(_replenishments(F, P, C, gamma))
        merge(_machine_events(F, P, C, params))
        dummy = tau - sum(p * gamma for p in P) - sum(mu[c] for c in C)
        merge({SystemState(F, P, C, 0): dummy})
    elif C[j - 1] == 0:
        # corrective dispatch
        F1 = _add(F, y, -1) if y != -1 else _add(F, x, -1)
        P1 = _add(P, x, 1)
        merge(_replenishments(F1, P1, C, gamma))
        merge(_machine_events(F1, P1, C, params))
        dummy = tau - sum(p * gamma for p in P1) - sum(mu[c] for c in C)
        merge({SystemState(F1, P1, C, 0): dummy})
    elif x >= 0:
        # preventive dispatch at a degradation epoch
        F1 = _add(F, y, -1) if y != -1 else _add(F, x, -1)
        P1 = _add(P, x, 1)
        CN = _replace(C, j, N)
        alpha = params.degradation.alpha
        merge(_replenishments(F1, P1, CN, gamma))
        merge(_machine_events(F1, P1, CN, params, skip=j))
        merge({SystemState(F1, P1, _replace(C, j, N - 1), j): (1 - alpha[N]) * mu[N]})
        merge({SystemState(F1, P1, _replace(C, j, 0), j): alpha[N] * mu[N]})
        dummy = tau - sum(p * gamma for p in P1) - sum(mu[c] for c in C) + mu[C[j - 1]] - mu[N]
        merge({SystemState(F1, P1, CN, 0): dummy})
    else:
        # relocation or nothing after a degradation or repair
        F1 = _add(_add(F, y, -1), z, 1)
        merge(_replenishments(F1, P, C, gamma))
        merge(_machine_events(F1, P, C, params))
        dummy = tau - sum(p * gamma for p in P) - sum(mu[c] for c in C)
        merge({SystemState(F1, P, C, 0): dummy})

    return {target: rate for target, rate in rates.items() if rate > 0}


class InvariantValidator:
    """
    Runs every check on one model and collects a report; a check that
    raises is recorded as failed
    """

    def __init__(self, params: ModelParams, samples: int = 100, seed: int = 0, solve: bool = True):
        self.params = params
        self.samples = samples
        self.seed = seed
        self.solve = solve
        self.builder = MDPBuilder(params)
        self.solver = MDPSolver()
        self._solutions: Dict[PolicyClass, PolicySolution] = {}

    @property
    def space(self):
        return self.builder.space

    @property
    def engine(self):
        return self.builder.engine

    def _pairs(self) -> List[Tuple[SystemState, Action]]:
        return [
            (state, action)
            for state in self.space
            for action in admissible_actions(state, PolicyClass.OCPR, self.params)
        ]

    def check_state_space(self) -> str:
        expected = self.space.expected_size(self.params.I, self.params.J, self.params.K, self.params.N)
        _expect(len(self.space) == expected, f"{len(self.space)} states, expected {expected}")
        for index, state in enumerate(self.space):
            _expect(self.space.index_of(state) == index, f"index mismatch at {index}")
            _expect(sum(state.F) + sum(state.P) == self.params.K, f"state {index} breaks K")
        return f"{len(self.space)} states"

    def check_action_nesting(self) -> str:
        for state in self.space:
            sets = {cls: set(admissible_actions(state, cls, self.params)) for cls in PolicyClass}
            _expect(sets[PolicyClass.OC] <= sets[PolicyClass.OCP] <= sets[PolicyClass.OCPR], f"OCP nesting at {state}")
            _expect(sets[PolicyClass.OC] <= sets[PolicyClass.OCR] <= sets[PolicyClass.OCPR], f"OCR nesting at {state}")
            _expect(sets[PolicyClass.CF] <= sets[PolicyClass.OC], f"CF action outside OC at {state}")
        return "nested in every state"

    def check_dispatch_on_failure(self) -> str:
        epochs = 0
        for state in self.space:
            if epoch_kind(state, self.params.N) != EpochKind.FAILURE:
                continue
            epochs += 1
            for cls in PolicyClass:
                actions = admissible_actions(state, cls, self.params)
                _expect(all(a.x >= 0 for a in actions), f"{cls.value} allows no dispatch at {state}")
                if not any(state.F):
                    _expect(actions == (closest_first_action(state, self.params),), f"empty stock at {state}")
        return f"{epochs} failure epochs"

    def check_costs(self) -> str:
        for state, action in self._pairs():
            cost = immediate_cost(state, action, self.params)
            _expect(cost >= 0, f"negative cost at {state}, {action}")
            if action == NO_ACTION:
                _expect(cost == 0, f"do-nothing costs {cost} at {state}")
        return "nonnegative, zero for do-nothing"

    def check_rate_conservation(self) -> str:
        tau = self.engine.tau
        pairs = self._pairs()
        for state, action in pairs:
            rates = self.engine.successor_rates(state, action)
            _expect(abs(sum(rates.values()) - tau) <= RATE_TOLERANCE * tau, f"rates do not sum to tau at {state}")
            row = self.engine.transition_row(state, action)
            _expect(abs(row.total - 1.0) <= 1e-12, f"row sum {row.total} at {state}, {action}")
            _expect(all(0.0 <= p <= 1.0 for p in row.entries.values()), f"probability outside [0,1] at {state}")
        return f"{len(pairs)} rows"

    def check_dummy_nonnegative(self) -> str:
        tau = self.engine.tau
        smallest = tau
        for state, action in self._pairs():
            post = post_action_state(state, action, self.params.N)
            total = sum(rate for _, rate in self.engine.event_rates(post))
            smallest = min(smallest, tau - total)
        _expect(smallest >= -RATE_TOLERANCE * tau, f"dummy rate {smallest}")
        return f"smallest dummy rate {smallest:.6g}"

    def check_successors(self) -> str:
        for state, action in self._pairs():
            for successor in self.engine.successor_rates(state, action):
                _expect(successor in self.space, f"successor {successor} outside the state space")
                _expect(sum(successor.F) + sum(successor.P) == self.params.K, f"K broken by {successor}")
        return "valid and K-conserving"

    def check_literal_equivalence(self) -> str:
        pairs = self._pairs()
        rng = np.random.default_rng(self.seed)
        count = min(self.samples, len(pairs))
        chosen = rng.choice(len(pairs), size=count, replace=False)
        tau = self.engine.tau
        for k in chosen:
            state, action = pairs[k]
            expected: Dict[int, float] = {}
            for target, rate in literal_rates(state, action, self.params, tau).items():
                index = self.space.index_of(target)
                expected[index] = expected.get(index, 0.0) + rate / tau
            row = self.engine.transition_row(state, action).entries
            actual = {index: p for index, p in row.items() if p > 1e-15}
            expected = {index: p for index, p in expected.items() if p > 1e-15}
            _expect(actual.keys() == expected.keys(), f"different successors at {state}, {action}")
            for index, p in expected.items():
                _expect(abs(actual[index] - p) <= 1e-12, f"p={actual[index]} vs {p} at {state}, {action}")
        return f"{count} sampled pairs agree"

    def _solution(self, cls: PolicyClass) -> PolicySolution:
        if cls not in self._solutions:
            self._solutions[cls] = solve_policy_class(self.builder, self.solver, cls)
        return self._solutions[cls]

    def check_dominance(self) -> str:
        for smaller, larger in DOMINANCE_PAIRS:
            gap = float(np.max(self._solution(smaller).V - self._solution(larger).V))
            _expect(gap <= DOMINANCE_TOLERANCE, f"V_{smaller.value} exceeds V_{larger.value} by {gap:.3e}")
        return "componentwise dominance holds"

    def check_bellman_residuals(self) -> str:
        worst = 0.0
        for cls in PolicyClass:
            solution = self._solution(cls)
            _expect(solution.converged, f"{cls.value} did not converge")
            _expect(solution.bellman_residual < RESIDUAL_TOLERANCE, f"{cls.value} residual {solution.bellman_residual:.3e}")
            _expect(solution.stationary_residual < 1e-10, f"{cls.value} stationary residual {solution.stationary_residual:.3e}")
            worst = max(worst, solution.bellman_residual)
        return f"largest residual {worst:.3e}"

    def check_value_iteration_agreement(self) -> str:
        worst = 0.0
        for cls in PolicyClass:
            result = self.solver.value_iteration(self.builder.build(cls), eps=1e-7)
            gap = float(np.max(np.abs(result.V - self._solution(cls).V)))
            _expect(gap <= AGREEMENT_TOLERANCE, f"{cls.value} PI/VI gap {gap:.3e}")
            worst = max(worst, gap)
        return f"largest gap {worst:.3e}"

    def checks(self) -> List[Tuple[str, Callable[[], str]]]:
        structural = [
            ("state_space", self.check_state_space),
            ("action_nesting", self.check_action_nesting),
            ("dispatch_on_failure", self.check_dispatch_on_failure),
            ("immediate_costs", self.check_costs),
            ("rate_conservation", self.check_rate_conservation),
            ("dummy_nonnegative", self.check_dummy_nonnegative),
            ("successor_validity", self.check_successors),
            ("literal_equivalence", self.check_literal_equivalence),
        ]
        if not self.solve:
            return structural
        return structural + [
            ("dominance", self.check_dominance),
            ("bellman_residuals", self.check_bellman_residuals),
            ("value_iteration_agreement", self.check_value_iteration_agreement),
        ]

    def run(self) -> ValidationReport:
        report = ValidationReport(n_states=len(self.space))
        for name, check in self.checks():
            try:
                detail = check()
                report.checks.append(CheckResult(name=name, passed=True, detail=detail))
            except Exception as e:
                logger.error(f"Check {name} failed: {str(e)}")
                report.checks.append(CheckResult(name=name, passed=False, detail=str(e)))
        logger.info(f"Validation: {len(report.checks) - len(report.failures)}/{len(report.checks)} checks passed")
        return report


def validate_model(params: ModelParams, samples: int = 100, seed: int = 0, solve: bool = True) -> ValidationReport:
    return InvariantValidator(params, samples=samples, seed=seed, solve=solve).run()
