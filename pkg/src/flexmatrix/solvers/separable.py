"""Closed-form minimum in-window load when vehicles are not coupled.

Each vehicle pushes as much energy as it can into its dwell slots outside the
window; only the remainder, ``max(0, e - r * delta * n_out)``, has to be
charged inside it.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..core import ChargeSession, Horizon, LoadProfile, validate_sessions
from ..errors import CapacityGroupsPresent
from .base import MinLoadSolution, Window


def min_in_window_energy(session: ChargeSession, horizon: Horizon, window: Window) -> float:
    n_out = session.dwell_slots - window.overlap(session)
    return max(0.0, session.energy_kwh - session.max_rate_kw * horizon.slot_duration_hours * n_out)


def _fill(series: np.ndarray, slots, energy: float, rate: float, delta: float) -> None:
    """Charge ``energy`` into ``slots`` in the given order, full rate first."""
    full_slot = rate * delta
    for tau in slots:
        if energy <= 0:
            return
        chunk = min(energy, full_slot)
        series[tau] = chunk / delta
        energy -= chunk


def separable_schedule(session: ChargeSession, horizon: Horizon, window: Window) -> tuple[np.ndarray, float]:
    """Optimal per-vehicle schedule and its in-window energy.

    Ties are broken deterministically: charge outside the window goes into the
    earliest available slots, required in-window charge into the latest ones.
    """
    delta = horizon.slot_duration_hours
    in_energy = min_in_window_energy(session, horizon, window)
    dwell = range(session.arrival_slot, session.departure_slot + 1)
    outside = [tau for tau in dwell if tau not in window]
    inside = [tau for tau in reversed(dwell) if tau in window]
    series = np.zeros(horizon.num_slots)
    _fill(series, outside, session.energy_kwh - in_energy, session.max_rate_kw, delta)
    _fill(series, inside, in_energy, session.max_rate_kw, delta)
    return series, in_energy


def min_load_separable(constraints, horizon: Horizon, window: Window) -> MinLoadSolution:
    """Minimum-load schedule for ``window`` without coupling constraints.

    ``constraints`` may be a :class:`ConstraintSet` or a plain sequence of
    sessions. A constraint set carrying capacity limits is rejected with
    :class:`CapacityGroupsPresent`; use :func:`min_load_flow` for those.
    """
    sessions: Sequence[ChargeSession]
    if hasattr(constraints, "sessions"):
        if not constraints.is_separable:
            raise CapacityGroupsPresent("capacity constraints couple vehicles; use min_load_flow")
        sessions = constraints.sessions
    else:
        sessions = constraints
    window.check(horizon)
    validate_sessions(sessions, horizon)
    per_vehicle = {}
    total = 0.0
    for session in sessions:
        series, in_energy = separable_schedule(session, horizon, window)
        per_vehicle[session.vehicle_id] = series
        total += in_energy
    return MinLoadSolution(
        window=window,
        schedule=LoadProfile.from_per_vehicle(horizon, per_vehicle),
        in_window_energy_kwh=total,
    )
