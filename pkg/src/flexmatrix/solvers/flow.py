"""Exact minimum in-window load under shared capacity limits, as a min-cost flow.

Network, per window::

    source --e_i--> vehicle i --r_i*delta--> group slot (g, tau) --C_g*delta--> slot tau --C*delta--> sink

Vehicle-to-slot arcs cost 1 per unit inside the window and 0 outside, so the
min-cost flow that saturates every supply arc minimises in-window energy.
Ungrouped vehicles connect straight to the slot node.

Energies are integers in units of ``resolution_kwh / (4 * num_arcs)``.
Supplies are rounded down and arc capacities up, making the integer problem a
slight relaxation of the real one: it stays feasible whenever the real problem
is, and the accumulated rounding amounts to at most ``resolution_kwh / 4``.
"""

from __future__ import annotations

import heapq
import math
from typing import Optional

import numpy as np

from ..core import ConstraintSet, Horizon, LoadProfile, validate_sessions
from ..errors import JointlyInfeasible, QuantizationOverflow
from .base import MinLoadSolution, Window

DEFAULT_RESOLUTION_KWH = 0.001
_INT64_MAX = 2**63 - 1
_ROUNDING_GUARD = 1e-9


class FlowNetwork:
    """Residual graph with paired arcs; arc ``a ^ 1`` is the reverse of ``a``."""

    def __init__(self):
        self.adj: list[list[int]] = []
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[int] = []

    def add_node(self) -> int:
        self.adj.append([])
        return len(self.adj) - 1

    def add_arc(self, u: int, v: int, cap: int, cost: int = 0) -> int:
        arc = len(self.to)
        self.to += [v, u]
        self.cap += [cap, 0]
        self.cost += [cost, -cost]
        self.adj[u].append(arc)
        self.adj[v].append(arc + 1)
        return arc

    def flow(self, arc: int) -> int:
        return self.cap[arc ^ 1]

    @property
    def num_arcs(self) -> int:
        return len(self.to) // 2

    def min_cost_flow(self, source: int, sink: int) -> tuple[int, int]:
        """Push the maximum flow at minimum cost; returns ``(flow, cost)``.

        Successive shortest paths with node potentials. After each Dijkstra
        pass all shortest augmenting paths are saturated at once by a blocking
        flow on the zero-reduced-cost subgraph. All initial costs must be >= 0.
        """
        n = len(self.adj)
        potential = [0] * n
        total = 0
        while True:
            dist = self._dijkstra(source, potential)
            if dist[sink] is None:
                break
            for v in range(n):
                if dist[v] is not None:
                    potential[v] += dist[v]
            pushed = self._augment_shortest(source, sink, potential)
            if pushed == 0:
                break
            total += pushed
        cost = sum(self.cost[a] * self.cap[a + 1] for a in range(0, len(self.to), 2))
        return total, cost

    def _dijkstra(self, source: int, potential: list[int]) -> list[Optional[int]]:
        dist: list[Optional[int]] = [None] * len(self.adj)
        dist[source] = 0
        heap = [(0, source)]
        to, cap, cost, adj = self.to, self.cap, self.cost, self.adj
        while heap:
            d, u = heapq.heappop(heap)
            if d != dist[u]:
                continue
            pu = potential[u]
            for a in adj[u]:
                if cap[a] <= 0:
                    continue
                v = to[a]
                nd = d + cost[a] + pu - potential[v]
                if dist[v] is None or nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def _augment_shortest(self, source: int, sink: int, potential: list[int]) -> int:
        """Dinic max flow restricted to residual arcs with zero reduced cost."""
        to, cap, cost, adj = self.to, self.cap, self.cost, self.adj

        def admissible(a: int, u: int) -> bool:
            return cap[a] > 0 and cost[a] + potential[u] - potential[to[a]] == 0

        total = 0
        while True:
            level = [-1] * len(adj)
            level[source] = 0
            queue = [source]
            for u in queue:
                for a in adj[u]:
                    v = to[a]
                    if level[v] < 0 and admissible(a, u):
                        level[v] = level[u] + 1
                        queue.append(v)
            if level[sink] < 0:
                return total
            cursor = [0] * len(adj)

            def push(u: int, limit: int) -> int:
                if u == sink:
                    return limit
                sent = 0
                arcs = adj[u]
                while cursor[u] < len(arcs) and sent < limit:
                    a = arcs[cursor[u]]
                    v = to[a]
                    if level[v] == level[u] + 1 and admissible(a, u):
                        got = push(v, min(limit - sent, cap[a]))
                        if got:
                            cap[a] -= got
                            cap[a ^ 1] += got
                            sent += got
                            if cap[a] > 0:
                                continue
                    cursor[u] += 1
                return sent

            while True:
                got = push(source, _INT64_MAX)
                if not got:
                    break
                total += got


class _WindowNetwork:
    """The EV scheduling network for one window (or none, for feasibility)."""

    SOURCE, SINK = 0, 1

    def __init__(self, constraints: ConstraintSet, horizon: Horizon, window: Optional[Window], resolution_kwh: float):
        if not resolution_kwh > 0:
            raise ValueError(f"resolution_kwh must be positive, got {resolution_kwh!r}")
        sessions = constraints.sessions
        delta = horizon.slot_duration_hours
        present = sorted({tau for s in sessions for tau in range(s.arrival_slot, s.departure_slot + 1)})
        group_of = constraints.group_of()
        group_slots = sorted({(group_of[s.vehicle_id], tau)
                              for s in sessions if s.vehicle_id in group_of
                              for tau in range(s.arrival_slot, s.departure_slot + 1)})
        num_arcs = len(sessions) + sum(s.dwell_slots for s in sessions) + len(group_slots) + len(present)
        self.unit_kwh = resolution_kwh / (4 * max(num_arcs, 1))
        unit = self.unit_kwh

        def down(energy: float) -> int:
            return math.floor(energy / unit + _ROUNDING_GUARD)

        def up(energy: float) -> int:
            return math.ceil(energy / unit - _ROUNDING_GUARD)

        self.supply = [down(s.energy_kwh) for s in sessions]
        total = sum(self.supply)
        if total > _INT64_MAX // 2:
            raise QuantizationOverflow(
                f"total energy {sum(s.energy_kwh for s in sessions)} kWh overflows at {unit:.3g} kWh per unit"
            )
        unbounded = total + 1

        net = FlowNetwork()
        net.add_node()
        net.add_node()
        slot_node = {}
        for tau in present:
            slot_node[tau] = net.add_node()
            cap = unbounded if constraints.global_capacity_kw is None else up(constraints.global_capacity_kw * delta)
            net.add_arc(slot_node[tau], self.SINK, cap)
        group_node = {}
        for g, tau in group_slots:
            group_node[g, tau] = net.add_node()
            net.add_arc(group_node[g, tau], slot_node[tau], up(constraints.capacity_groups[g].capacity_kw * delta))

        self.supply_arcs = []
        self.charge_arcs: list[list[tuple[int, int]]] = []
        for s, supply in zip(sessions, self.supply):
            v = net.add_node()
            self.supply_arcs.append(net.add_arc(self.SOURCE, v, supply))
            g = group_of.get(s.vehicle_id)
            rate_cap = up(s.max_rate_kw * delta)
            arcs = []
            for tau in range(s.arrival_slot, s.departure_slot + 1):
                head = slot_node[tau] if g is None else group_node[g, tau]
                cost = 1 if window is not None and tau in window else 0
                arcs.append((tau, net.add_arc(v, head, rate_cap, cost)))
            self.charge_arcs.append(arcs)
        self.net = net
        self.sessions = sessions
        self.horizon = horizon

    def solve(self) -> int:
        flow, cost = self.net.min_cost_flow(self.SOURCE, self.SINK)
        short = [s.vehicle_id for s, arc, supply in zip(self.sessions, self.supply_arcs, self.supply)
                 if self.net.flow(arc) < supply]
        if short:
            raise JointlyInfeasible(
                f"energy cannot be delivered to {len(short)} vehicle(s) under the capacity limits: "
                + ", ".join(map(str, short[:10])) + (" ..." if len(short) > 10 else ""),
                short,
            )
        return cost

    def schedule(self) -> LoadProfile:
        delta = self.horizon.slot_duration_hours
        per_vehicle = {}
        for s, arcs in zip(self.sessions, self.charge_arcs):
            series = np.zeros(self.horizon.num_slots)
            for tau, arc in arcs:
                series[tau] = self.net.flow(arc) * self.unit_kwh / delta
            per_vehicle[s.vehicle_id] = series
        return LoadProfile.from_per_vehicle(self.horizon, per_vehicle)


def check_joint_feasibility(
    constraints: ConstraintSet, horizon: Horizon, resolution_kwh: float = DEFAULT_RESOLUTION_KWH
) -> None:
    _WindowNetwork(constraints, horizon, None, resolution_kwh).solve()


def min_load_flow(
    constraints: ConstraintSet,
    horizon: Horizon,
    window: Window,
    resolution_kwh: float = DEFAULT_RESOLUTION_KWH,
) -> MinLoadSolution:
    """Minimum-load schedule for ``window`` under rate, dwell and capacity constraints.

    Raises :class:`JointlyInfeasible` if the fleet's energy cannot be
    delivered at all. The in-window energy is within ``resolution_kwh`` of the
    exact LP optimum.
    """
    window.check(horizon)
    validate_sessions(constraints.sessions, horizon)
    network = _WindowNetwork(constraints, horizon, window, resolution_kwh)
    cost = network.solve()
    return MinLoadSolution(
        window=window,
        schedule=network.schedule(),
        in_window_energy_kwh=cost * network.unit_kwh,
    )
