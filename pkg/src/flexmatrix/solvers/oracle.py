"""Brute-force reference solver for tiny instances.

Every vehicle's rate in every slot is restricted to the grid
``{0, s, 2s, ...} <= r_i`` with ``s = r_max / grid_points``. All grid schedules
are enumerated slot by slot, keeping for each vector of energy delivered so
far (in grid units, saturating at the requirement) the cheapest in-window
energy that reaches it. Combinations violating a capacity limit are dropped.

When every rate, capacity and energy is a multiple of ``s * delta`` the grid
contains an optimal LP vertex and the result is exact.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..core import ConstraintSet, Horizon, LoadProfile, validate_sessions
from ..errors import InstanceTooLarge, JointlyInfeasible
from .base import MinLoadSolution, Window

MAX_VEHICLES = 4
MAX_SLOTS = 8
_TOL = 1e-9


def oracle_gap_kwh(constraints: ConstraintSet, horizon: Horizon, window: Window, grid_points: int) -> float:
    """Claimed bound on how far the oracle's optimum may sit above the LP optimum."""
    if not constraints.sessions:
        return 0.0
    r_max = max(s.max_rate_kw for s in constraints.sessions)
    return r_max / grid_points * horizon.slot_duration_hours * window.length_slots * len(constraints.sessions)


def _shift(arr: np.ndarray, axis: int, step: int) -> np.ndarray:
    """Push costs along ``axis`` by ``step`` grid units, saturating at the last index."""
    if step == 0:
        return arr
    a = np.moveaxis(arr, axis, 0)
    top = a.shape[0] - 1
    out = np.full_like(a, np.inf)
    if step < top:
        out[step:top] = a[: top - step]
    out[top] = a[max(0, top - step):].min(axis=0)
    return np.moveaxis(out, 0, axis)


def _predecessors(state: int, step: int, top: int) -> range:
    if state < top:
        return range(state - step, state - step + 1) if state >= step else range(0)
    return range(max(0, top - step), top + 1)


def min_load_oracle(
    constraints: ConstraintSet, horizon: Horizon, window: Window, grid_points: int = 4
) -> MinLoadSolution:
    sessions = constraints.sessions
    if len(sessions) > MAX_VEHICLES or horizon.num_slots > MAX_SLOTS:
        raise InstanceTooLarge(
            f"oracle limited to {MAX_VEHICLES} vehicles and {MAX_SLOTS} slots, "
            f"got {len(sessions)} and {horizon.num_slots}"
        )
    if grid_points < 1:
        raise ValueError("grid_points must be >= 1")
    window.check(horizon)
    validate_sessions(sessions, horizon)
    delta = horizon.slot_duration_hours
    T = horizon.num_slots
    if not sessions:
        return MinLoadSolution(window, LoadProfile.from_per_vehicle(horizon, {}), 0.0)

    step_kw = max(s.max_rate_kw for s in sessions) / grid_points
    unit_kwh = step_kw * delta
    top_level = [int(math.floor(s.max_rate_kw / step_kw + _TOL)) for s in sessions]
    need = [max(0, int(math.ceil(s.energy_kwh / unit_kwh - _TOL))) for s in sessions]
    group_of = constraints.group_of()
    members = [[i for i, s in enumerate(sessions) if group_of.get(s.vehicle_id) == g]
               for g in range(len(constraints.capacity_groups))]

    def allowed(combo) -> bool:
        for g, idx in enumerate(members):
            limit = constraints.capacity_groups[g].capacity_kw
            if sum(combo[i] for i in idx) * step_kw > limit * (1 + _TOL) + _TOL:
                return False
        if constraints.global_capacity_kw is not None:
            if sum(combo) * step_kw > constraints.global_capacity_kw * (1 + _TOL) + _TOL:
                return False
        return True

    def slot_combos(tau: int):
        choices = [range(top + 1) if s.arrival_slot <= tau <= s.departure_slot else range(1)
                   for s, top in zip(sessions, top_level)]
        weight = unit_kwh if tau in window else 0.0
        return [(c, weight * sum(c)) for c in itertools.product(*choices) if allowed(c)]

    cost = np.full([n + 1 for n in need], np.inf)
    cost[(0,) * len(sessions)] = 0.0
    history = [cost]
    for tau in range(T):
        new = np.full_like(cost, np.inf)
        for combo, inc in slot_combos(tau):
            shifted = cost
            for axis, j in enumerate(combo):
                shifted = _shift(shifted, axis, j)
            np.minimum(new, shifted + inc, out=new)
        cost = new
        history.append(cost)

    best = float(cost[tuple(need)])
    if not math.isfinite(best):
        raise JointlyInfeasible("no grid schedule delivers every vehicle's energy",
                                [s.vehicle_id for s in sessions])

    rates = np.zeros((len(sessions), T))
    state = tuple(need)
    for tau in reversed(range(T)):
        target = history[tau + 1][state]
        prev = history[tau]
        for combo, inc in slot_combos(tau):
            options = [_predecessors(si, j, n) for si, j, n in zip(state, combo, need)]
            match = next((p for p in itertools.product(*options)
                          if abs(prev[p] + inc - target) <= _TOL * max(1.0, abs(target))), None)
            if match is not None:
                rates[:, tau] = np.asarray(combo) * step_kw
                state = match
                break
        else:  # pragma: no cover - the forward pass guarantees a predecessor
            raise RuntimeError("oracle backtracking failed")

    per_vehicle = {s.vehicle_id: rates[i] for i, s in enumerate(sessions)}
    return MinLoadSolution(window, LoadProfile.from_per_vehicle(horizon, per_vehicle), best)
