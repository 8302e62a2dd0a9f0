"""
State Space enumeration and indexing
Dense integer indices over all (F, P, C, j) with constant aggregate inventory
"""

import itertools
import logging
from collections import deque
from math import comb
from typing import Callable, Iterable, Iterator, Optional, Sequence, Tuple

from config import MAX_STATES
from errors import InvalidStateError, StateSpaceTooLargeError
from models import ModelParams, SystemState

logger = logging.getLogger(__name__)


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Nonnegative integer vectors of given length and sum, lexicographic"""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def canonical_state(params: ModelParams) -> SystemState:
    """All machines perfect, nothing in the pipeline, stock spread evenly"""
    base, remainder = divmod(params.K, params.I)
    stock = tuple(base + (1 if i < remainder else 0) for i in range(params.I))
    return SystemState(stock, (0,) * params.I, (params.N,) * params.J, 0)


class StateSpace:
    """
    Ordered, immutable collection of system states with an index bijection
    """

    def __init__(self, params: ModelParams, states: Sequence[SystemState]):
        self.params = params
        self.states: Tuple[SystemState, ...] = tuple(states)
        self._index = {state: k for k, state in enumerate(self.states)}

    @staticmethod
    def expected_size(I: int, J: int, K: int, N: int) -> int:
        """Closed-form count of the full product space"""
        return comb(K + 2 * I - 1, 2 * I - 1) * (N + 1) ** J * (J + 1)

    @classmethod
    def enumerate(cls, params: ModelParams, max_states: Optional[int] = None) -> "StateSpace":
        """Enumerate every state in lexicographic (F, P, C, j) order"""
        limit = MAX_STATES if max_states is None else max_states
        size = cls.expected_size(params.I, params.J, params.K, params.N)
        if size > limit:
            raise StateSpaceTooLargeError(
                f"State space has {size} states, limit is {limit}",
                {"size": size, "limit": limit},
            )

        I, J, N = params.I, params.J, params.N
        conditions = list(itertools.product(range(N + 1), repeat=J))
        states = [
            SystemState(levels[:I], levels[I:], condition, j)
            for levels in _compositions(params.K, 2 * I)
            for condition in conditions
            for j in range(J + 1)
        ]
        logger.debug(f"Enumerated {len(states)} states (I={I}, J={J}, K={params.K}, N={N})")
        return cls(params, states)

    def reachable_subspace(
        self,
        successors: Callable[[SystemState], Iterable[SystemState]],
        start: Optional[SystemState] = None,
    ) -> "StateSpace":
        """Restrict to the states reachable from start (canonical by default)"""
        origin = start if start is not None else canonical_state(self.params)
        self.index_of(origin)
        seen = {origin}
        frontier = deque([origin])
        while frontier:
            state = frontier.popleft()
            for successor in successors(state):
                if successor not in seen:
                    seen.add(successor)
                    frontier.append(successor)
        logger.info(f"Reachable subspace: {len(seen)} of {len(self)} states")
        return StateSpace(self.params, sorted(seen))

    def index_of(self, state: SystemState) -> int:
        try:
            return self._index[state]
        except KeyError:
            raise InvalidStateError("State is not in the state space", {"state": list(state)}) from None

    def state_of(self, index: int) -> SystemState:
        if not 0 <= index < len(self.states):
            raise InvalidStateError(
                f"Index {index} out of range [0, {len(self.states)})", {"index": index}
            )
        return self.states[index]

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[SystemState]:
        return iter(self.states)

    def __contains__(self, state: object) -> bool:
        return state in self._index
