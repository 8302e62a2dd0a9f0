import pytest

from action_space import (
    admissible_actions,
    closest_first_action,
    epoch_kind,
    immediate_cost,
    post_action_state,
    stocked_warehouses,
    type1_actions,
    type2_actions,
)
from conftest import make_params
from errors import InadmissibleActionError
from models import NO_ACTION, Action, EpochKind, PolicyClass, SystemState


def state(F, C=(2, 2), j=1, P=None):
    return SystemState(tuple(F), tuple(P) if P is not None else (0,) * len(F), tuple(C), j)


class TestStockedWarehouses:
    def test_examples(self):
        assert stocked_warehouses(state((1, 0))) == {1}
        assert stocked_warehouses(state((0, 0))) == set()
        assert stocked_warehouses(state((2, 1))) == {1, 2}


class TestEpochKind:
    def test_classification(self):
        assert epoch_kind(state((1, 1), j=0), 2) == EpochKind.REPLENISHMENT
        assert epoch_kind(state((1, 1), C=(0, 2)), 2) == EpochKind.FAILURE
        assert epoch_kind(state((1, 1), C=(1, 2)), 2) == EpochKind.DEGRADATION
        assert epoch_kind(state((1, 1), C=(2, 0)), 2) == EpochKind.REPAIR


class TestType1:
    def test_two_stocked_warehouses(self):
        actions = type1_actions(state((1, 1), C=(0, 2)), 2)
        assert actions == {
            Action(1, 2, 1),
            Action(2, 1, 2),
            Action(0, -1, -1),
            Action(1, -1, -1),
            Action(2, -1, -1),
        }

    def test_empty_stock_leaves_central_dispatch(self):
        assert type1_actions(state((0, 0), C=(0, 2)), 2) == {Action(0, -1, -1)}

    def test_three_stocked_warehouses(self):
        actions = type1_actions(state((1, 1, 1), C=(0, 2)), 2)
        assert len(actions) == 10

    def test_rejects_replenishment_and_perfect_machine(self):
        with pytest.raises(InadmissibleActionError):
            type1_actions(state((1, 1), j=0), 2)
        with pytest.raises(InadmissibleActionError):
            type1_actions(state((1, 1), C=(2, 2)), 2)


class TestType2:
    def test_single_stocked_warehouse(self):
        assert type2_actions(state((1, 0))) == {Action(-1, 1, 2), NO_ACTION}

    def test_empty_stock(self):
        assert type2_actions(state((0, 0))) == {NO_ACTION}

    def test_three_warehouses(self):
        assert len(type2_actions(state((1, 1, 0)))) == 5

    def test_destinations_are_local(self):
        assert all(a.z != 0 for a in type2_actions(state((2, 1, 1))))


class TestAdmissibleActions:
    def test_closest_first_picks_nearest_stocked(self):
        params = make_params(R=((4.0, 5.0), (7.0, 5.0)))
        assert admissible_actions(state((1, 1), C=(0, 2)), PolicyClass.CF, params) == (Action(1, -1, -1),)

    def test_closest_first_skips_empty_warehouse(self):
        params = make_params(R=((4.0, 5.0), (7.0, 5.0)))
        assert closest_first_action(state((0, 2), C=(0, 2)), params) == Action(2, -1, -1)

    def test_closest_first_ties_go_to_lowest_index(self):
        params = make_params(R=((5.0, 5.0), (5.0, 5.0)))
        assert closest_first_action(state((1, 1), C=(0, 2)), params) == Action(1, -1, -1)

    def test_closest_first_central_when_empty(self, params):
        assert admissible_actions(state((0, 0), P=(1, 1), C=(0, 2)), PolicyClass.CF, params) == (Action(0, -1, -1),)

    def test_ocpr_degradation_union(self, params):
        actions = admissible_actions(state((1, 1), C=(1, 2)), PolicyClass.OCPR, params)
        assert len(actions) == 8
        assert list(actions) == sorted(actions)

    def test_ocp_degradation_has_no_relocation(self, params):
        actions = admissible_actions(state((1, 1), C=(1, 2)), PolicyClass.OCP, params)
        assert NO_ACTION in actions
        assert all(a.y == -1 for a in actions)
        assert len(actions) == 4

    def test_oc_never_prevents(self, params):
        assert admissible_actions(state((1, 1), C=(1, 2)), PolicyClass.OC, params) == (NO_ACTION,)

    def test_replenishment_epoch_only_waits(self, params):
        for cls in PolicyClass:
            assert admissible_actions(state((1, 0), P=(0, 1), j=0), cls, params) == (NO_ACTION,)

    def test_repair_epoch_relocation_only(self, params):
        repaired = state((1, 1), C=(2, 1), j=1)
        assert admissible_actions(repaired, PolicyClass.OCR, params) == tuple(sorted(type2_actions(repaired)))
        assert admissible_actions(repaired, PolicyClass.OCP, params) == (NO_ACTION,)

    def test_failure_always_dispatches(self, params):
        failed = state((1, 1), C=(0, 2))
        for cls in PolicyClass:
            assert all(a.x >= 0 for a in admissible_actions(failed, cls, params))


class TestPostActionState:
    def test_failure_dispatch(self):
        post = post_action_state(state((1, 1), C=(0, 2)), Action(1, -1, -1), 2)
        assert (post.F, post.P, post.C) == ((0, 1), (1, 0), (0, 2))

    def test_dispatch_with_refill(self):
        post = post_action_state(state((1, 1), C=(0, 2)), Action(1, 2, 1), 2)
        assert (post.F, post.P) == ((1, 0), (1, 0))

    def test_preventive_from_central_restores_condition(self):
        post = post_action_state(state((1, 1), C=(1, 2)), Action(0, -1, -1), 2)
        assert (post.F, post.P, post.C) == ((1, 1), (0, 0), (2, 2))

    def test_pure_relocation(self):
        post = post_action_state(state((1, 0), C=(2, 1), j=2), Action(-1, 1, 2), 2)
        assert (post.F, post.P) == ((0, 1), (0, 0))

    def test_aggregate_inventory_preserved(self):
        before = state((2, 1), C=(0, 2))
        for action in type1_actions(before, 2):
            after = post_action_state(before, action, 2)
            assert sum(after.F) + sum(after.P) == sum(before.F) + sum(before.P)

    def test_empty_warehouse_rejected(self):
        with pytest.raises(InadmissibleActionError):
            post_action_state(state((0, 1), C=(0, 2)), Action(1, -1, -1), 2)


class TestImmediateCost:
    def test_central_dispatch(self, params):
        assert immediate_cost(state((0, 0), P=(1, 1), C=(0, 2)), Action(0, -1, -1), params) == 10

    def test_late_corrective_with_refill(self, params):
        # R[2][1] = 12 against t* = 10
        cost = immediate_cost(state((1, 1), C=(0, 2)), Action(2, 1, 2), params)
        assert cost == pytest.approx(2.3)

    def test_preventive(self, params):
        degraded = state((1, 1), C=(1, 2))
        assert immediate_cost(degraded, Action(1, 2, 1), params) == pytest.approx(0.4)
        assert immediate_cost(degraded, Action(1, -1, -1), params) == pytest.approx(0.2)

    def test_do_nothing_is_free(self, params):
        assert immediate_cost(state((1, 1), C=(1, 2)), NO_ACTION, params) == 0
