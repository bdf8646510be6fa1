"""Synthetic charge sessions for commercial-fleet archetypes.

An archetype is three truncated normals (clock hour of arrival, dwell
duration, energy need) plus a charger rate. The shipped ``freight`` and
``transit`` archetypes are rough, hand-tuned stand-ins for depot-charging
fleets; edit the JSON files rather than the code to recalibrate them.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.stats import truncnorm

from .core import FEASIBILITY_RTOL, ChargeSession, Horizon
from .errors import ArchetypeInfeasible, EmptyFleet, HorizonTooShort

MAX_ATTEMPTS = 1000
SHIPPED_ARCHETYPES = ("freight", "transit")


@dataclass(frozen=True)
class TruncatedNormal:
    mean: float
    std: float
    min: float
    max: float

    def __post_init__(self):
        if self.std < 0:
            raise ValueError(f"std must be >= 0, got {self.std}")
        if not self.min < self.max:
            raise ValueError(f"truncation bounds need min < max, got [{self.min}, {self.max}]")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.std == 0:
            return np.full(size, min(max(self.mean, self.min), self.max), dtype=float)
        a = (self.min - self.mean) / self.std
        b = (self.max - self.mean) / self.std
        return truncnorm.rvs(a, b, loc=self.mean, scale=self.std, size=size, random_state=rng)


@dataclass(frozen=True)
class FleetArchetype:
    name: str
    arrival_hour: TruncatedNormal
    dwell_hours: TruncatedNormal
    energy_kwh: TruncatedNormal
    max_rate_kw: float

    def __post_init__(self):
        if not self.max_rate_kw > 0:
            raise ValueError(f"max_rate_kw must be positive, got {self.max_rate_kw}")
        if self.arrival_hour.max - self.arrival_hour.min > 24:
            raise ValueError("arrival bounds may span at most 24 hours")
        if self.dwell_hours.min <= 0:
            raise ValueError("dwell lower bound must be positive")
        if self.energy_kwh.min < 0:
            raise ValueError("energy lower bound must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "FleetArchetype":
        def dist(block: dict, mean_keys: Sequence[str], std_keys: Sequence[str]) -> TruncatedNormal:
            mean = next(block[k] for k in mean_keys if k in block)
            std = next(block[k] for k in std_keys if k in block)
            return TruncatedNormal(float(mean), float(std), float(block["min"]), float(block["max"]))

        try:
            return cls(
                name=str(data["name"]),
                arrival_hour=dist(data["arrival"], ("mean_hour", "mean"), ("std_hours", "std")),
                dwell_hours=dist(data["dwell"], ("mean_hours", "mean"), ("std_hours", "std")),
                energy_kwh=dist(data["energy_kwh"], ("mean", "mean_kwh"), ("std", "std_kwh")),
                max_rate_kw=float(data["max_rate_kw"]),
            )
        except (KeyError, StopIteration, TypeError) as exc:
            raise ValueError(f"malformed archetype config: {exc!r}") from None

    def to_dict(self) -> dict:
        arrival, dwell, energy = asdict(self.arrival_hour), asdict(self.dwell_hours), asdict(self.energy_kwh)
        return {
            "name": self.name,
            "arrival": {"mean_hour": arrival["mean"], "std_hours": arrival["std"],
                        "min": arrival["min"], "max": arrival["max"]},
            "dwell": {"mean_hours": dwell["mean"], "std_hours": dwell["std"],
                      "min": dwell["min"], "max": dwell["max"]},
            "energy_kwh": energy,
            "max_rate_kw": self.max_rate_kw,
        }


def load_archetype(source: Union[str, Path]) -> FleetArchetype:
    """Load an archetype from a JSON file, or by name for the shipped defaults."""
    if str(source) in SHIPPED_ARCHETYPES:
        text = resources.files("flexmatrix.data").joinpath(f"{source}.json").read_text(encoding="utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    return FleetArchetype.from_dict(json.loads(text))


def _arrival_offset_hours(archetype: FleetArchetype, horizon: Horizon, hours: np.ndarray) -> np.ndarray:
    # Clock hours -> hours after horizon start; the truncation interval maps
    # contiguously, starting at the first occurrence of its lower bound.
    lo = (archetype.arrival_hour.min - horizon.start_hour) % 24.0
    return lo + (hours - archetype.arrival_hour.min)


def sample_fleet(archetype: FleetArchetype, n: int, horizon: Horizon, seed: int) -> list[ChargeSession]:
    """Draw ``n`` individually feasible sessions, deterministically in ``seed``.

    Arrival is floored to its slot and departure rounded up to a slot
    boundary, so each slotted dwell contains the sampled continuous one.
    Infeasible draws (energy above rate x dwell) are redrawn jointly, up to
    ``MAX_ATTEMPTS`` times per session.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    delta = horizon.slot_duration_hours
    latest = _arrival_offset_hours(archetype, horizon, np.array([archetype.arrival_hour.max]))[0]
    latest += archetype.dwell_hours.max
    if math.ceil(latest / delta - 1e-9) > horizon.num_slots:
        raise HorizonTooShort(
            f"archetype {archetype.name!r} can depart {latest:g} h after horizon start; "
            f"horizon covers {horizon.duration_hours:g} h"
        )
    if n == 0:
        return []

    rng = np.random.default_rng(seed)
    arrival = np.zeros(n, dtype=np.int64)
    departure = np.zeros(n, dtype=np.int64)
    energy = np.zeros(n)
    pending = np.arange(n)
    for _ in range(MAX_ATTEMPTS):
        m = len(pending)
        start = _arrival_offset_hours(archetype, horizon, archetype.arrival_hour.sample(rng, m))
        dwell = archetype.dwell_hours.sample(rng, m)
        need = archetype.energy_kwh.sample(rng, m)
        a = np.floor(start / delta + 1e-9).astype(np.int64)
        d = np.maximum(np.ceil((start + dwell) / delta - 1e-9).astype(np.int64) - 1, a)
        ok = need <= archetype.max_rate_kw * delta * (d - a + 1) * (1 + FEASIBILITY_RTOL)
        idx = pending[ok]
        arrival[idx], departure[idx], energy[idx] = a[ok], d[ok], need[ok]
        pending = pending[~ok]
        if len(pending) == 0:
            break
    else:
        raise ArchetypeInfeasible(
            f"archetype {archetype.name!r}: {len(pending)} session(s) still infeasible after {MAX_ATTEMPTS} draws"
        )
    width = len(str(n - 1))
    return [
        ChargeSession(f"{archetype.name}-{i:0{width}d}", int(arrival[i]), int(departure[i]),
                      float(energy[i]), archetype.max_rate_kw)
        for i in range(n)
    ]


def empirical_dwell_probability(sessions: Sequence[ChargeSession], horizon: Horizon) -> np.ndarray:
    """Fraction of the fleet connected in each slot."""
    if not sessions:
        raise EmptyFleet("dwell probability of an empty fleet is undefined")
    counts = np.zeros(horizon.num_slots)
    for s in sessions:
        counts[s.arrival_slot:s.departure_slot + 1] += 1
    return counts / len(sessions)


@dataclass(frozen=True)
class SlackDistribution:
    hours: np.ndarray

    @property
    def median(self) -> float:
        return float(np.median(self.hours)) if len(self.hours) else math.nan


def slack_distribution(sessions: Sequence[ChargeSession], horizon: Horizon) -> SlackDistribution:
    """Per-session slack: dwell time minus the minimum charging time e / r, in hours."""
    delta = horizon.slot_duration_hours
    return SlackDistribution(np.array([s.slack_hours(delta) for s in sessions], dtype=float))
