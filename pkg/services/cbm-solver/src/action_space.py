"""
Action Space for the CBM spare-parts MDP
Epoch classification, admissible actions per policy class, post-action
state algebra and immediate costs
"""

import logging
from typing import FrozenSet, Tuple

from errors import InadmissibleActionError
from models import (
    NO_ACTION,
    Action,
    EpochKind,
    ModelParams,
    PolicyClass,
    SystemState,
)

logger = logging.getLogger(__name__)


def stocked_warehouses(state: SystemState) -> FrozenSet[int]:
    """Local warehouses (1-based) holding at least one part"""
    return frozenset(i + 1 for i, stock in enumerate(state.F) if stock > 0)


def epoch_kind(state: SystemState, N: int) -> EpochKind:
    """Classify the event that triggered the decision epoch"""
    if state.j == 0:
        return EpochKind.REPLENISHMENT
    condition = state.C[state.j - 1]
    if condition == 0:
        return EpochKind.FAILURE
    if condition == N:
        return EpochKind.REPAIR
    return EpochKind.DEGRADATION


def type1_actions(state: SystemState, N: int) -> FrozenSet[Action]:
    """Dispatch actions, optionally refilling the dispatching warehouse"""
    if state.j == 0 or state.C[state.j - 1] == N:
        raise InadmissibleActionError(
            "Dispatch actions need a failed or degraded machine",
            {"j": state.j, "C": list(state.C)},
        )
    stocked = sorted(stocked_warehouses(state))
    actions = {Action(x, y, x) for x in stocked for y in stocked if y != x}
    actions.update(Action(x, -1, -1) for x in [0] + stocked)
    return frozenset(actions)


def type2_actions(state: SystemState) -> FrozenSet[Action]:
    """Single relocation between local warehouses, or nothing"""
    n_warehouses = len(state.F)
    actions = {
        Action(-1, y, z)
        for y in stocked_warehouses(state)
        for z in range(1, n_warehouses + 1)
        if z != y
    }
    actions.add(NO_ACTION)
    return frozenset(actions)


def closest_first_action(state: SystemState, params: ModelParams) -> Action:
    """Closest stocked warehouse by response time, central when all are empty"""
    stocked = sorted(stocked_warehouses(state))
    if not stocked:
        return Action(0, -1, -1)
    # min keeps the first minimum, so ties go to the lowest index
    nearest = min(stocked, key=lambda i: params.instance.response_time(i, state.j))
    return Action(nearest, -1, -1)


def admissible_actions(
    state: SystemState, cls: PolicyClass, params: ModelParams
) -> Tuple[Action, ...]:
    """Admissible actions of a policy class, sorted lexicographically"""
    kind = epoch_kind(state, params.N)
    if kind == EpochKind.REPLENISHMENT:
        return (NO_ACTION,)

    if cls == PolicyClass.CF:
        if kind == EpochKind.FAILURE:
            return (closest_first_action(state, params),)
        return (NO_ACTION,)

    if kind == EpochKind.FAILURE:
        actions = type1_actions(state, params.N)
        if cls in (PolicyClass.OC, PolicyClass.OCP):
            actions = frozenset(a for a in actions if a.y == -1)
    elif kind == EpochKind.DEGRADATION:
        if cls == PolicyClass.OC:
            actions = frozenset({NO_ACTION})
        elif cls == PolicyClass.OCR:
            actions = type2_actions(state)
        elif cls == PolicyClass.OCP:
            actions = frozenset(a for a in type1_actions(state, params.N) if a.y == -1) | {NO_ACTION}
        else:
            actions = type1_actions(state, params.N) | type2_actions(state)
    else:
        if cls in (PolicyClass.OCR, PolicyClass.OCPR):
            actions = type2_actions(state)
        else:
            actions = frozenset({NO_ACTION})
    return tuple(sorted(actions))


def post_action_state(state: SystemState, action: Action, N: int) -> SystemState:
    """State immediately after the action, before the next event"""
    x, y, z = action
    if (y == -1) != (z == -1) or (y >= 1 and z == y):
        raise InadmissibleActionError("Malformed relocation", {"action": list(action)})

    stock = list(state.F)
    pipeline = list(state.P)
    conditions = list(state.C)

    if x >= 1:
        if y == -1:
            stock[x - 1] -= 1
        pipeline[x - 1] += 1
    if y >= 1:
        stock[y - 1] -= 1
    if x == -1 and z >= 1:
        stock[z - 1] += 1
    if x >= 0 and state.j >= 1 and conditions[state.j - 1] > 0:
        # preventive replacement restores the perfect condition at once
        conditions[state.j - 1] = N

    if any(level < 0 for level in stock):
        raise InadmissibleActionError(
            "Action takes stock from an empty warehouse",
            {"F": list(state.F), "action": list(action)},
        )
    return SystemState(tuple(stock), tuple(pipeline), tuple(conditions), state.j)


def immediate_cost(state: SystemState, action: Action, params: ModelParams) -> float:
    """Setup costs of the action plus late-response penalties"""
    costs = params.costs
    x, y, _ = action
    relocation = costs.c_rs if y > 0 else 0.0

    if x == 0:
        return costs.c_e
    if x > 0:
        if state.C[state.j - 1] == 0:
            response = params.instance.response_time(x, state.j)
            late = 0.0
            if response > params.instance.t_star:
                late = costs.c_cl + costs.c_cp * (response - params.instance.t_star)
            return costs.c_cs + costs.c_r + late + relocation
        return costs.c_ps + costs.c_r + relocation
    return relocation
