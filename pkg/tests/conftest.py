import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from flexmatrix.core import CapacityGroup, ChargeSession, ConstraintSet, Horizon


def session(a, d, e, r, vid="v"):
    return ChargeSession(vid, a, d, e, r)


def _max_flow_by_cuts(constraints, horizon, slots):
    """Max deliverable energy using only ``slots``, by enumerating every s-t cut.

    For a fixed set K of vehicles left on the source side, each slot's network
    is a tree, so its cheapest cut is a nested min over (global, group, arc).
    """
    delta = horizon.slot_duration_hours
    sessions = constraints.sessions
    group_of = constraints.group_of()
    best = np.inf
    for keep in itertools.product((False, True), repeat=len(sessions)):
        cost = sum(s.energy_kwh for s, k in zip(sessions, keep) if not k)
        for tau in slots:
            grouped = [0.0] * len(constraints.capacity_groups)
            loose = 0.0
            for s, k in zip(sessions, keep):
                if k and s.arrival_slot <= tau <= s.departure_slot:
                    g = group_of.get(s.vehicle_id)
                    if g is None:
                        loose += s.max_rate_kw * delta
                    else:
                        grouped[g] += s.max_rate_kw * delta
            slot_cut = loose + sum(min(c.capacity_kw * delta, x)
                                   for c, x in zip(constraints.capacity_groups, grouped))
            if constraints.global_capacity_kw is not None:
                slot_cut = min(slot_cut, constraints.global_capacity_kw * delta)
            cost += slot_cut
        best = min(best, cost)
    return best


def exact_min_in_window(constraints, horizon, window):
    """Exact LP optimum: total energy minus the max flow through out-of-window slots.

    Returns None when the instance is jointly infeasible.
    """
    total = sum(s.energy_kwh for s in constraints.sessions)
    all_slots = range(horizon.num_slots)
    if _max_flow_by_cuts(constraints, horizon, all_slots) < total - 1e-9:
        return None
    outside = [tau for tau in all_slots if tau not in window]
    return max(0.0, total - _max_flow_by_cuts(constraints, horizon, outside))


def lp_min_in_window(constraints, horizon, window):
    """The same LP handed to HiGHS, with the energy constraint as an inequality."""
    sessions = constraints.sessions
    n, T = len(sessions), horizon.num_slots
    delta = horizon.slot_duration_hours
    if n == 0:
        return 0.0
    idx = lambda i, tau: i * T + tau  # noqa: E731
    c = np.zeros(n * T)
    bounds = []
    for i, s in enumerate(sessions):
        for tau in range(T):
            if tau in window:
                c[idx(i, tau)] = delta
            present = s.arrival_slot <= tau <= s.departure_slot
            bounds.append((0.0, s.max_rate_kw if present else 0.0))
    rows, rhs = [], []
    for i, s in enumerate(sessions):
        row = np.zeros(n * T)
        row[[idx(i, tau) for tau in range(T)]] = -delta
        rows.append(row)
        rhs.append(-s.energy_kwh)
    group_of = constraints.group_of()
    for g, group in enumerate(constraints.capacity_groups):
        for tau in range(T):
            row = np.zeros(n * T)
            for i, s in enumerate(sessions):
                if group_of.get(s.vehicle_id) == g:
                    row[idx(i, tau)] = 1.0
            rows.append(row)
            rhs.append(group.capacity_kw)
    if constraints.global_capacity_kw is not None:
        for tau in range(T):
            row = np.zeros(n * T)
            row[[idx(i, tau) for i in range(n)]] = 1.0
            rows.append(row)
            rhs.append(constraints.global_capacity_kw)
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if res.status == 2:
        return None
    assert res.status == 0, res.message
    return float(res.fun)


def random_real_instance(rng, capacity, max_vehicles=3, max_slots=6):
    """Real-valued (off-lattice) small instance; may be jointly infeasible."""
    T = int(rng.integers(1, max_slots + 1))
    delta = float(rng.choice([0.25, 0.5, 1.0, 1.5]))
    sessions = []
    for i in range(int(rng.integers(1, max_vehicles + 1))):
        a = int(rng.integers(0, T))
        d = int(rng.integers(a, T))
        r = float(rng.uniform(0.5, 20.0))
        e = float(rng.uniform(0, 1) * r * delta * (d - a + 1))
        sessions.append(ChargeSession(f"v{i}", a, d, e, r))
    groups, global_cap = [], None
    if capacity:
        labels = rng.integers(0, 2, size=len(sessions))
        for g in range(2):
            members = [s for s, lab in zip(sessions, labels) if lab == g]
            if members and rng.random() < 0.8:
                top = sum(s.max_rate_kw for s in members)
                groups.append(CapacityGroup({s.vehicle_id for s in members}, float(rng.uniform(0.2, 1.0) * top)))
        if not groups or rng.random() < 0.3:
            global_cap = float(rng.uniform(0.3, 1.0) * sum(s.max_rate_kw for s in sessions))
    return ConstraintSet(sessions, groups, global_cap), Horizon(T, delta)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance report ---------------------------------------------------------

_ACCEPTANCE = []
_SETUP_S = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "setup":
        _SETUP_S[item.nodeid] = report.duration
        if report.passed:
            return
    elif report.when != "call":
        return
    detail = ""
    if report.failed and hasattr(report.longrepr, "reprcrash"):
        detail = " ".join(report.longrepr.reprcrash.message.split())[:160]
    duration = report.duration + (_SETUP_S.get(item.nodeid, 0.0) if report.when == "call" else 0.0)
    _ACCEPTANCE.append((marker.args[0], marker.args[1], report.outcome, duration, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for ident, title, outcome, duration, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        line = f"[{status}] {ident:<3} {title} ({duration:.2f} s)"
        terminalreporter.write_line(line + (f": {detail}" if detail else ""))
