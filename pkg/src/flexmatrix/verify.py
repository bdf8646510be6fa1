"""Randomised cross-check of the flow solver against the brute-force oracle.

Instances live on an integer lattice (rates, capacities in whole kW, energy
in whole slot-kWh) and the oracle grid step is 1 kW, so the oracle is exact
on them and any discrepancy beyond quantisation is a solver bug.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import CapacityGroup, ChargeSession, ConstraintSet, Horizon
from .errors import JointlyInfeasible
from .solvers import (
    DEFAULT_RESOLUTION_KWH,
    Window,
    check_joint_feasibility,
    min_load_flow,
    min_load_oracle,
    min_load_separable,
    oracle_gap_kwh,
)

MAX_VEHICLES = 3
MAX_SLOTS = 6


@dataclass(frozen=True)
class Instance:
    constraints: ConstraintSet
    horizon: Horizon
    window: Window

    @property
    def grid_points(self) -> int:
        return int(max((s.max_rate_kw for s in self.constraints.sessions), default=1))


def random_instance(rng: np.random.Generator, capacity: Optional[bool] = None) -> Instance:
    """One small lattice instance; ``capacity=None`` picks coupling at random."""
    T = int(rng.integers(1, MAX_SLOTS + 1))
    delta = float(rng.choice([0.5, 1.0]))
    n = int(rng.integers(1, MAX_VEHICLES + 1))
    sessions = []
    for i in range(n):
        a = int(rng.integers(0, T))
        d = int(rng.integers(a, T))
        r = int(rng.integers(1, 5))
        e = delta * int(rng.integers(0, r * (d - a + 1) + 1))
        sessions.append(ChargeSession(f"v{i}", a, d, e, float(r)))
    if capacity is None:
        capacity = bool(rng.integers(0, 2))
    groups = []
    global_cap = None
    if capacity:
        labels = rng.integers(0, 3, size=n)
        for g in range(3):
            members = [s for s, lab in zip(sessions, labels) if lab == g]
            if members:
                top = int(sum(s.max_rate_kw for s in members))
                groups.append(CapacityGroup({s.vehicle_id for s in members}, float(rng.integers(1, top + 1))))
        if rng.random() < 0.3:
            global_cap = float(rng.integers(1, int(sum(s.max_rate_kw for s in sessions)) + 1))
    t = int(rng.integers(0, T))
    k = int(rng.integers(1, T - t + 1))
    return Instance(ConstraintSet(sessions, groups, global_cap), Horizon(T, delta), Window(t, k))


def random_feasible_instance(rng: np.random.Generator, capacity: Optional[bool] = None,
                             max_tries: int = 1000) -> Instance:
    for _ in range(max_tries):
        inst = random_instance(rng, capacity)
        try:
            check_joint_feasibility(inst.constraints, inst.horizon)
        except JointlyInfeasible:
            continue
        return inst
    raise RuntimeError("could not draw a feasible instance")


@dataclass
class VerifyReport:
    trials: int = 0
    max_discrepancy_kwh: float = 0.0
    max_gap_kwh: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_instance(inst: Instance, flow_solver: Callable = min_load_flow,
                   resolution_kwh: float = DEFAULT_RESOLUTION_KWH) -> tuple[float, float, list[str]]:
    """Return ``(flow-vs-oracle discrepancy, allowed bound, problems)`` for one instance."""
    c, h, w = inst.constraints, inst.horizon, inst.window
    n_q = len(c.sessions) * resolution_kwh
    gap = oracle_gap_kwh(c, h, w, inst.grid_points)
    bound = gap + n_q
    problems = []
    flow = flow_solver(c, h, w, resolution_kwh).in_window_energy_kwh
    try:
        oracle = min_load_oracle(c, h, w, inst.grid_points).in_window_energy_kwh
    except JointlyInfeasible:
        return float("inf"), bound, ["oracle found no schedule for a flow-feasible instance"]
    discrepancy = abs(flow - oracle)
    if discrepancy > bound:
        problems.append(f"flow {flow:.6f} vs oracle {oracle:.6f} kWh exceeds bound {bound:.6f}")
    if c.is_separable:
        sep = min_load_separable(c, h, w).in_window_energy_kwh
        if abs(flow - sep) > n_q:
            problems.append(f"flow {flow:.6f} vs separable {sep:.6f} kWh exceeds {n_q:.6f}")
    return discrepancy, bound, problems


def run_verify(trials: int, seed: int, flow_solver: Callable = min_load_flow,
               resolution_kwh: float = DEFAULT_RESOLUTION_KWH) -> VerifyReport:
    """Check ``trials`` random instances; trial ``i`` is reproducible from ``(seed, i)`` alone."""
    report = VerifyReport()
    for i in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed % 2**64, spawn_key=(i,)))
        inst = random_feasible_instance(rng)
        discrepancy, bound, problems = check_instance(inst, flow_solver, resolution_kwh)
        report.trials += 1
        report.max_discrepancy_kwh = max(report.max_discrepancy_kwh, discrepancy)
        report.max_gap_kwh = max(report.max_gap_kwh, bound)
        if problems:
            report.failures.append((i, inst, problems))
    return report
