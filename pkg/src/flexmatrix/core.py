"""Domain types, slot arithmetic and the uncoordinated (charge-on-arrival) baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import BadOrdering, InfeasibleEnergy, InvalidParameter, OutOfHorizon

# Relative slack allowed when comparing e against r * delta * dwell, so that
# sessions built as e = r * delta * dwell are never rejected for rounding noise.
FEASIBILITY_RTOL = 1e-12


@dataclass(frozen=True)
class Horizon:
    """Discrete time grid of ``num_slots`` slots, each ``slot_duration_hours`` long.

    Slot ``tau`` covers ``[tau * delta, (tau + 1) * delta)`` hours after
    ``start_hour`` (a wall-clock hour used only for labelling and for mapping
    clock-time distributions onto slots).
    """

    num_slots: int
    slot_duration_hours: float = 1.0
    start_hour: float = 0.0

    def __post_init__(self):
        if int(self.num_slots) != self.num_slots or self.num_slots < 1:
            raise ValueError(f"num_slots must be a positive integer, got {self.num_slots!r}")
        if not self.slot_duration_hours > 0:
            raise ValueError(f"slot_duration_hours must be positive, got {self.slot_duration_hours!r}")
        object.__setattr__(self, "num_slots", int(self.num_slots))
        object.__setattr__(self, "slot_duration_hours", float(self.slot_duration_hours))
        object.__setattr__(self, "start_hour", float(self.start_hour))

    @property
    def duration_hours(self) -> float:
        return self.num_slots * self.slot_duration_hours

    def clock_hour(self, slot: int) -> float:
        """Wall-clock hour of day (in [0, 24)) at which ``slot`` begins."""
        return (self.start_hour + slot * self.slot_duration_hours) % 24.0

    def clock_label(self, slot: int) -> str:
        hour = self.clock_hour(slot)
        minutes = int(round(hour * 60)) % (24 * 60)
        return f"{minutes // 60:02d}:{minutes % 60:02d}"


@dataclass(frozen=True)
class ChargeSession:
    """One vehicle's visit to its charger.

    ``departure_slot`` is inclusive: the vehicle is connected during slots
    ``arrival_slot .. departure_slot``.
    """

    vehicle_id: Hashable
    arrival_slot: int
    departure_slot: int
    energy_kwh: float
    max_rate_kw: float

    @property
    def dwell_slots(self) -> int:
        return self.departure_slot - self.arrival_slot + 1

    def max_energy_kwh(self, slot_duration_hours: float) -> float:
        """Energy deliverable when charging at full rate for the whole dwell."""
        return self.max_rate_kw * slot_duration_hours * self.dwell_slots

    def slack_hours(self, slot_duration_hours: float) -> float:
        return slot_duration_hours * self.dwell_slots - self.energy_kwh / self.max_rate_kw


@dataclass(frozen=True)
class CapacityGroup:
    """Vehicles sharing one power limit, e.g. a depot transformer."""

    member_vehicle_ids: frozenset
    capacity_kw: float

    def __post_init__(self):
        object.__setattr__(self, "member_vehicle_ids", frozenset(self.member_vehicle_ids))
        if not self.capacity_kw > 0:
            raise ValueError(f"capacity_kw must be positive, got {self.capacity_kw!r}")


@dataclass(frozen=True)
class ConstraintSet:
    sessions: tuple
    capacity_groups: tuple = ()
    global_capacity_kw: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "sessions", tuple(self.sessions))
        object.__setattr__(self, "capacity_groups", tuple(self.capacity_groups))
        ids = [s.vehicle_id for s in self.sessions]
        if len(set(ids)) != len(ids):
            raise ValueError("vehicle ids must be unique within a constraint set")
        known = set(ids)
        seen: set = set()
        for group in self.capacity_groups:
            unknown = group.member_vehicle_ids - known
            if unknown:
                raise ValueError(f"capacity group references unknown vehicles: {sorted(map(str, unknown))}")
            if group.member_vehicle_ids & seen:
                raise ValueError("capacity groups must be disjoint")
            seen |= group.member_vehicle_ids
        if self.global_capacity_kw is not None and not self.global_capacity_kw > 0:
            raise ValueError(f"global_capacity_kw must be positive, got {self.global_capacity_kw!r}")

    @property
    def is_separable(self) -> bool:
        return not self.capacity_groups and self.global_capacity_kw is None

    def group_of(self) -> dict:
        """Map vehicle id -> index into ``capacity_groups`` (grouped vehicles only)."""
        return {vid: g for g, group in enumerate(self.capacity_groups) for vid in group.member_vehicle_ids}


@dataclass(frozen=True)
class LoadProfile:
    """Charging power per slot in kW, aggregate and optionally per vehicle."""

    horizon: Horizon
    aggregate: np.ndarray
    per_vehicle: Optional[Mapping[Hashable, np.ndarray]] = field(default=None)

    def __post_init__(self):
        agg = np.asarray(self.aggregate, dtype=float)
        if agg.shape != (self.horizon.num_slots,):
            raise ValueError(f"aggregate must have shape ({self.horizon.num_slots},), got {agg.shape}")
        agg.setflags(write=False)
        object.__setattr__(self, "aggregate", agg)
        if self.per_vehicle is not None:
            frozen = {}
            for vid, series in self.per_vehicle.items():
                arr = np.asarray(series, dtype=float)
                arr.setflags(write=False)
                frozen[vid] = arr
            object.__setattr__(self, "per_vehicle", frozen)

    @classmethod
    def from_per_vehicle(cls, horizon: Horizon, per_vehicle: Mapping[Hashable, np.ndarray]) -> "LoadProfile":
        aggregate = np.zeros(horizon.num_slots)
        for series in per_vehicle.values():
            aggregate = aggregate + series
        return cls(horizon=horizon, aggregate=aggregate, per_vehicle=per_vehicle)

    def energy_kwh(self, start: int = 0, stop: Optional[int] = None) -> float:
        """Aggregate energy delivered in slots ``start .. stop - 1``."""
        return float(self.aggregate[start:stop].sum()) * self.horizon.slot_duration_hours


def validate_session(session: ChargeSession, horizon: Horizon) -> None:
    """Check a session against the horizon; raise a :class:`SessionError` subclass if invalid.

    The ``code`` attribute of the raised error is one of ``invalid_parameter``,
    ``bad_ordering``, ``out_of_horizon`` or ``infeasible_energy``.
    """
    vid = session.vehicle_id
    for name in ("arrival_slot", "departure_slot"):
        value = getattr(session, name)
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise InvalidParameter(f"vehicle {vid}: {name} must be an integer, got {value!r}", vid)
    if not (math.isfinite(session.energy_kwh) and session.energy_kwh >= 0):
        raise InvalidParameter(f"vehicle {vid}: energy_kwh must be finite and >= 0, got {session.energy_kwh!r}", vid)
    if not (math.isfinite(session.max_rate_kw) and session.max_rate_kw > 0):
        raise InvalidParameter(f"vehicle {vid}: max_rate_kw must be finite and > 0, got {session.max_rate_kw!r}", vid)
    if session.arrival_slot > session.departure_slot:
        raise BadOrdering(
            f"vehicle {vid}: arrival_slot {session.arrival_slot} > departure_slot {session.departure_slot}", vid
        )
    if session.arrival_slot < 0 or session.departure_slot >= horizon.num_slots:
        raise OutOfHorizon(
            f"vehicle {vid}: dwell [{session.arrival_slot}, {session.departure_slot}] "
            f"outside horizon [0, {horizon.num_slots - 1}]",
            vid,
        )
    limit = session.max_energy_kwh(horizon.slot_duration_hours)
    if session.energy_kwh > limit * (1 + FEASIBILITY_RTOL):
        raise InfeasibleEnergy(
            f"vehicle {vid}: energy {session.energy_kwh} kWh exceeds deliverable {limit} kWh", vid
        )


def validate_sessions(sessions: Iterable[ChargeSession], horizon: Horizon) -> None:
    for session in sessions:
        validate_session(session, horizon)


def uncoordinated_series(session: ChargeSession, horizon: Horizon) -> np.ndarray:
    """Charge at full rate from arrival; the final slot carries the fractional remainder."""
    delta = horizon.slot_duration_hours
    series = np.zeros(horizon.num_slots)
    full_slot = session.max_rate_kw * delta
    remaining = session.energy_kwh
    for tau in range(session.arrival_slot, session.departure_slot + 1):
        if remaining <= 0:
            break
        if tau == session.departure_slot or remaining <= full_slot:
            # Last slot absorbs any rounding residue so delivered energy equals e.
            series[tau] = remaining / delta
            remaining = 0.0
        else:
            series[tau] = session.max_rate_kw
            remaining -= full_slot
    return series


def uncoordinated_profile(sessions: Sequence[ChargeSession], horizon: Horizon) -> LoadProfile:
    validate_sessions(sessions, horizon)
    per_vehicle = {s.vehicle_id: uncoordinated_series(s, horizon) for s in sessions}
    return LoadProfile.from_per_vehicle(horizon, per_vehicle)


def validate_feasibility(constraints: ConstraintSet, horizon: Horizon) -> None:
    """Raise :class:`JointlyInfeasible` unless some joint schedule meets every constraint.

    Without coupling constraints per-session validity is sufficient; otherwise
    a zero-cost max flow is run and every vehicle's supply must saturate.
    """
    validate_sessions(constraints.sessions, horizon)
    if constraints.is_separable:
        return
    from .solvers.flow import check_joint_feasibility

    check_joint_feasibility(constraints, horizon)
