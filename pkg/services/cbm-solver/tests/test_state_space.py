import pytest

from conftest import make_params
from errors import InvalidStateError, StateSpaceTooLargeError
from models import SystemState
from state_space import StateSpace, canonical_state
from transition_engine import TransitionEngine


@pytest.mark.parametrize(
    "I, J, K, N, size",
    [(2, 2, 2, 2, 270), (2, 2, 2, 6, 1470), (1, 1, 0, 1, 4)],
)
def test_expected_size(I, J, K, N, size):
    assert StateSpace.expected_size(I, J, K, N) == size


def test_enumerate_default(params):
    space = StateSpace.enumerate(params)
    assert len(space) == 270
    assert list(space) == sorted(space)
    assert all(sum(s.F) + sum(s.P) == params.K for s in space)


def test_enumerate_without_inventory():
    space = StateSpace.enumerate(make_params(R=((1.0,),), N=1, K=0))
    assert len(space) == 4
    assert {s.C for s in space} == {(0,), (1,)}


def test_index_bijection(params):
    space = StateSpace.enumerate(params)
    for index, state in enumerate(space):
        assert space.index_of(state) == index
        assert space.state_of(index) == state


def test_unknown_state_rejected(params):
    space = StateSpace.enumerate(params)
    with pytest.raises(InvalidStateError):
        space.index_of(SystemState((3, 0), (0, 0), (2, 2), 0))
    with pytest.raises(InvalidStateError):
        space.state_of(len(space))
    assert SystemState((3, 0), (0, 0), (2, 2), 0) not in space


def test_size_limit(params):
    with pytest.raises(StateSpaceTooLargeError) as excinfo:
        StateSpace.enumerate(params, max_states=100)
    assert excinfo.value.details == {"size": 270, "limit": 100}


def test_canonical_state_spreads_stock():
    assert canonical_state(make_params(K=3)).F == (2, 1)
    assert canonical_state(make_params()) == SystemState((1, 1), (0, 0), (2, 2), 0)


def test_reachable_subspace_is_closed(params):
    space = StateSpace.enumerate(params)
    engine = TransitionEngine(params, space)
    reachable = space.reachable_subspace(engine.full_successors)

    assert canonical_state(params) in reachable
    assert len(reachable) <= len(space)
    for state in reachable:
        assert state in space
        assert all(successor in reachable for successor in engine.full_successors(state))
