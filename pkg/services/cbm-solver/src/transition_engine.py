"""
Transition Engine for the uniformized CBM chain
Generates event rates from post-action states and turns them into
next-state probability rows
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Dict, Iterator, List, NamedTuple, Tuple

from action_space import admissible_actions, post_action_state
from models import Action, ModelParams, PolicyClass, SystemState
from state_space import StateSpace

if TYPE_CHECKING:
    from mdp_solver import DiscountedMDP

logger = logging.getLogger(__name__)

REPLENISHMENT = "replenishment"
FAILURE = "failure"
DEGRADATION = "degradation"
REPAIR = "repair"

# slack for floating-point sums that exceed tau by rounding only
RATE_TOLERANCE = 1e-12


class Event(NamedTuple):
    """Event kind and its 1-based warehouse or machine"""

    kind: str
    target: int


@dataclass(frozen=True)
class TransitionRow:
    """Next-state probabilities for one (state, action) pair"""

    source: int
    action: Action
    entries: Dict[int, float]

    @property
    def total(self) -> float:
        return sum(self.entries.values())


def uniformization_constant(params: ModelParams) -> float:
    """tau = gamma K + J max_n mu_n"""
    return params.gamma * params.K + params.J * max(params.degradation.mu)


class TransitionEngine:
    """
    Builds transition rows of the uniformized discrete-time chain from a
    single generic event generator
    """

    def __init__(self, params: ModelParams, space: StateSpace):
        self.params = params
        self.space = space
        self.tau = uniformization_constant(params)
        self._rows: Dict[Tuple[int, Action], TransitionRow] = {}

    def event_rates(self, post: SystemState) -> List[Tuple[Event, float]]:
        """Competing exponential events out of a post-action state"""
        degradation = self.params.degradation
        events: List[Tuple[Event, float]] = []

        for k, pending in enumerate(post.P, start=1):
            if pending > 0:
                events.append((Event(REPLENISHMENT, k), pending * self.params.gamma))

        for machine, condition in enumerate(post.C, start=1):
            if condition == 0:
                events.append((Event(REPAIR, machine), degradation.mu[0]))
                continue
            failure = degradation.failure_rate(condition)
            if failure > 0:
                events.append((Event(FAILURE, machine), failure))
            wear = degradation.degradation_rate(condition)
            if wear > 0:
                events.append((Event(DEGRADATION, machine), wear))
        return events

    def apply_event(self, post: SystemState, event: Event) -> SystemState:
        """Successor state after the event; j marks the event's machine"""
        kind, target = event
        if kind == REPLENISHMENT:
            stock = list(post.F)
            pipeline = list(post.P)
            stock[target - 1] += 1
            pipeline[target - 1] -= 1
            return SystemState(tuple(stock), tuple(pipeline), post.C, 0)

        conditions = list(post.C)
        if kind == FAILURE:
            conditions[target - 1] = 0
        elif kind == DEGRADATION:
            conditions[target - 1] -= 1
        elif kind == REPAIR:
            conditions[target - 1] = self.params.N
        else:
            raise ValueError(f"Unknown event kind: {kind}")
        return SystemState(post.F, post.P, tuple(conditions), target)

    def successor_rates(self, state: SystemState, action: Action) -> Dict[SystemState, float]:
        """Rates to every successor, dummy self-transition included"""
        post = post_action_state(state, action, self.params.N)
        rates: Dict[SystemState, float] = {}
        total = 0.0
        for event, rate in self.event_rates(post):
            successor = self.apply_event(post, event)
            rates[successor] = rates.get(successor, 0.0) + rate
            total += rate

        dummy = self.tau - total
        if dummy < -RATE_TOLERANCE * self.tau:
            raise ValueError(f"Total rate {total} exceeds tau {self.tau}")
        if dummy > 0:
            idle = post._replace(j=0)
            rates[idle] = rates.get(idle, 0.0) + dummy
        return rates

    def transition_row(self, state: SystemState, action: Action) -> TransitionRow:
        """Probability row p(. | state, action), cached per (index, action)"""
        source = self.space.index_of(state)
        key = (source, action)
        row = self._rows.get(key)
        if row is None:
            entries: Dict[int, float] = {}
            for successor, rate in self.successor_rates(state, action).items():
                target = self.space.index_of(successor)
                entries[target] = entries.get(target, 0.0) + rate / self.tau
            row = self._rows.setdefault(key, TransitionRow(source, action, entries))
        return row

    def full_successors(self, state: SystemState) -> Iterator[SystemState]:
        """Successors under any action of the unrestricted action space"""
        for action in admissible_actions(state, PolicyClass.OCPR, self.params):
            yield from self.successor_rates(state, action)

    def dump(self, path: Path, mdp: "DiscountedMDP") -> int:
        """Write the sparse listing 'src x y z dst probability'"""
        path.parent.mkdir(parents=True, exist_ok=True)
        matrix = mdp.transitions
        lines = 0
        with open(path, "w") as f:
            for state_index in range(mdp.n_states):
                for pair in range(mdp.state_ptr[state_index], mdp.state_ptr[state_index + 1]):
                    x, y, z = mdp.actions[pair]
                    start, stop = matrix.indptr[pair], matrix.indptr[pair + 1]
                    for target, probability in sorted(zip(matrix.indices[start:stop], matrix.data[start:stop])):
                        f.write(f"{state_index} {x} {y} {z} {target} {probability:.17g}\n")
                        lines += 1
        logger.info(f"Transition listing with {lines} entries written to {path}")
        return lines
