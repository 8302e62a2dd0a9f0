import pytest

from action_space import admissible_actions
from conftest import instance_params
from models import PolicyClass
from transition_engine import TransitionEngine
from state_space import StateSpace
from validation import InvariantValidator, literal_rates, validate_model

RANDOM_LOADS = (1.0, 0.7, 0.5, 0.3)


def test_engine_matches_literal_families(fast_params):
    engine = TransitionEngine(fast_params, StateSpace.enumerate(fast_params))
    for state in engine.space:
        for action in admissible_actions(state, PolicyClass.OCPR, fast_params):
            expected = literal_rates(state, action, fast_params, engine.tau)
            actual = {s: r for s, r in engine.successor_rates(state, action).items() if r > 0}
            assert actual.keys() == expected.keys()
            for successor, rate in expected.items():
                assert actual[successor] == pytest.approx(rate, abs=1e-12)


def test_structural_checks_pass(params):
    report = validate_model(params, samples=50, solve=False)
    assert report.passed
    assert report.n_states == 270
    assert [check.name for check in report.checks][0] == "state_space"
    assert len(report.checks) == 8


def test_full_suite_on_small_model(small_params):
    report = validate_model(small_params, samples=1000)
    assert report.passed, report.failures
    assert {check.name for check in report.checks} >= {"dominance", "bellman_residuals", "value_iteration_agreement"}


def test_failing_check_is_reported(small_params, monkeypatch):
    validator = InvariantValidator(small_params, solve=False)

    def broken():
        raise AssertionError("rows do not sum to one")

    monkeypatch.setattr(validator, "check_rate_conservation", broken)
    report = validator.run()
    assert not report.passed
    assert [failure.name for failure in report.failures] == ["rate_conservation"]
    assert report.failures[0].detail == "rows do not sum to one"


@pytest.mark.parametrize("seed", range(20))
def test_structural_checks_on_random_instances(seed):
    params = instance_params(100 + seed, N=2 + seed % 2, rho=RANDOM_LOADS[seed % 4], setting=1 + seed % 3)
    report = validate_model(params, samples=100, seed=seed, solve=False)
    assert report.n_states <= 5000
    assert report.passed, report.failures


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_solver_oracles_on_random_instances(seed):
    # policy and value iteration agree for every class, plus dominance and residuals
    params = instance_params(200 + seed, rho=RANDOM_LOADS[seed % 4], setting=1 + seed % 3)
    report = validate_model(params, samples=20, seed=seed)
    assert report.passed, report.failures
    assert {check.name for check in report.checks} >= {
        "dominance",
        "bellman_residuals",
        "value_iteration_agreement",
    }
