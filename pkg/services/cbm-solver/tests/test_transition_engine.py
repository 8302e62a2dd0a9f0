import pytest

from action_space import admissible_actions
from conftest import make_params
from models import NO_ACTION, Action, PolicyClass, SystemState
from state_space import StateSpace
from transition_engine import (
    DEGRADATION,
    FAILURE,
    REPAIR,
    REPLENISHMENT,
    Event,
    TransitionEngine,
    uniformization_constant,
)


def engine_for(params):
    return TransitionEngine(params, StateSpace.enumerate(params))


@pytest.mark.parametrize(
    "params, tau",
    [
        (make_params(gamma=1.0), 4.0),
        (make_params(gamma=0.5), 3.0),
        (make_params(R=((1.0,),), N=1, K=0, gamma=3.0), 1.0),
    ],
)
def test_uniformization_constant(params, tau):
    assert uniformization_constant(params) == pytest.approx(tau)


class TestEventRates:
    def test_pipeline_and_degradation(self, fast_params):
        engine = engine_for(fast_params)
        events = dict(engine.event_rates(SystemState((1, 0), (1, 0), (2, 2), 0)))
        assert events == {
            Event(REPLENISHMENT, 1): 1.0,
            Event(DEGRADATION, 1): 1.0,
            Event(DEGRADATION, 2): 1.0,
        }

    def test_repair_and_failure(self, fast_params):
        engine = engine_for(fast_params)
        events = dict(engine.event_rates(SystemState((1, 1), (0, 0), (0, 1), 0)))
        assert events == {Event(REPAIR, 1): 1.0, Event(FAILURE, 2): 1.0}

    def test_perfect_machines_only_degrade(self):
        params = make_params(N=3)
        engine = engine_for(params)
        events = engine.event_rates(SystemState((1, 1), (0, 0), (3, 3), 0))
        assert sorted(events) == [(Event(DEGRADATION, 1), 1.0), (Event(DEGRADATION, 2), 1.0)]


class TestTransitionRow:
    def test_replenishment_epoch_dummy(self, fast_params):
        engine = engine_for(fast_params)
        state = SystemState((1, 0), (1, 0), (2, 2), 0)
        row = engine.transition_row(state, NO_ACTION)
        assert row.entries[engine.space.index_of(state)] == pytest.approx(0.25)
        assert row.total == pytest.approx(1.0)

    def test_preventive_dummy(self, fast_params):
        engine = engine_for(fast_params)
        state = SystemState((1, 1), (0, 0), (1, 2), 1)
        rates = engine.successor_rates(state, Action(1, -1, -1))
        idle = SystemState((0, 1), (1, 0), (2, 2), 0)
        assert rates[idle] == pytest.approx(1.0)
        assert sum(rates.values()) == pytest.approx(engine.tau)

    def test_successors_after_failure_dispatch(self, fast_params):
        engine = engine_for(fast_params)
        rates = engine.successor_rates(SystemState((1, 1), (0, 0), (0, 2), 1), Action(1, -1, -1))
        assert rates[SystemState((1, 1), (0, 0), (0, 2), 0)] == pytest.approx(1.0)
        assert rates[SystemState((0, 1), (1, 0), (2, 2), 1)] == pytest.approx(1.0)
        assert rates[SystemState((0, 1), (1, 0), (0, 1), 2)] == pytest.approx(1.0)

    def test_rows_are_stochastic(self, params):
        engine = engine_for(params)
        for state in engine.space:
            for action in admissible_actions(state, PolicyClass.OCPR, params):
                row = engine.transition_row(state, action)
                assert abs(row.total - 1.0) <= 1e-12
                assert all(p > 0 for p in row.entries.values())

    def test_rows_are_cached(self, params):
        engine = engine_for(params)
        state = engine.space.state_of(0)
        assert engine.transition_row(state, NO_ACTION) is engine.transition_row(state, NO_ACTION)


def test_dump_lists_every_entry(tmp_path, default_builder):
    mdp = default_builder.build(PolicyClass.CF)
    path = tmp_path / "transitions.txt"
    lines = default_builder.engine.dump(path, mdp)

    content = path.read_text().splitlines()
    assert lines == len(content) == mdp.transitions.nnz
    fields = content[0].split()
    assert len(fields) == 6
    assert int(fields[0]) == 0
