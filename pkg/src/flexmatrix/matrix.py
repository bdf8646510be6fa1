"""Reduction potential matrices: single fleets, Monte Carlo averages, CSV I/O."""

from __future__ import annotations

import csv
import enum
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import ConstraintSet, Horizon, uncoordinated_profile, validate_feasibility
from .solvers import DEFAULT_RESOLUTION_KWH, Window, min_load

NEGATIVE_TOL = 1e-9


class Normalization(str, enum.Enum):
    AGGREGATE = "aggregate"
    PER_VEHICLE = "per_vehicle"

    @classmethod
    def parse(cls, value: Union[str, "Normalization"]) -> "Normalization":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_"))
        except ValueError:
            raise ValueError(f"unknown normalization {value!r} (expected aggregate or per-vehicle)") from None


def valid_mask(max_delay: int, num_slots: int) -> np.ndarray:
    k = np.arange(1, max_delay + 1)[:, None]
    t = np.arange(num_slots)[None, :]
    return t + k <= num_slots


@dataclass(frozen=True)
class ReductionPotentialMatrix:
    """Reduction potentials in kW, ``values[k - 1, t]`` for the window of ``k`` slots from ``t``.

    Cells whose window would run past the horizon are NaN and ``False`` in
    ``valid_mask``. ``has_negative`` flags cells where capacity limits force
    more in-window load than unmanaged charging produces.
    """

    horizon: Horizon
    max_delay_slots: int
    values: np.ndarray
    valid_mask: np.ndarray
    normalization: Normalization = Normalization.AGGREGATE
    num_vehicles: int = 1
    has_negative: bool = False

    def __post_init__(self):
        shape = (self.max_delay_slots, self.horizon.num_slots)
        if self.values.shape != shape or self.valid_mask.shape != shape:
            raise ValueError(f"values and valid_mask must have shape {shape}")

    def cell(self, k: int, t: int) -> float:
        return float(self.values[k - 1, t])

    @property
    def first_row(self) -> np.ndarray:
        return self.values[0]

    def peak(self) -> tuple[float, int, int]:
        """``(value, t, k)`` of the largest valid cell; first in row-major order on ties."""
        masked = np.where(self.valid_mask, self.values, -np.inf)
        flat = int(np.argmax(masked))
        k_idx, t = divmod(flat, self.horizon.num_slots)
        return float(masked[k_idx, t]), t, k_idx + 1

    def shiftable_energy_kwh(self) -> float:
        """delta * sum of the first row. Not a simultaneous-dispatch guarantee."""
        row = self.values[0][self.valid_mask[0]]
        return float(row.sum()) * self.horizon.slot_duration_hours


def reduction_potential(
    constraints: ConstraintSet,
    horizon: Horizon,
    window: Window,
    resolution_kwh: float = DEFAULT_RESOLUTION_KWH,
) -> float:
    """Average kW by which uncoordinated load in ``window`` can be reduced.

    The uncoordinated baseline ignores capacity limits, so the result may be
    negative when those limits are binding.
    """
    window.check(horizon)
    baseline = uncoordinated_profile(constraints.sessions, horizon)
    solution = min_load(constraints, horizon, window, resolution_kwh)
    u_sum = float(baseline.aggregate[window.start_slot:window.stop_slot].sum())
    return (u_sum - solution.in_window_energy_kwh / horizon.slot_duration_hours) / window.length_slots


def _separable_values(constraints: ConstraintSet, horizon: Horizon, max_delay: int) -> np.ndarray:
    """Closed-form matrix for uncoupled fleets, vectorised over vehicles and start slots."""
    T = horizon.num_slots
    delta = horizon.slot_duration_hours
    sessions = constraints.sessions
    u = uncoordinated_profile(sessions, horizon).aggregate
    values = np.full((max_delay, T), np.nan)
    if not sessions:
        values[valid_mask(max_delay, T)] = 0.0
        return values
    a = np.array([s.arrival_slot for s in sessions])[:, None]
    d = np.array([s.departure_slot for s in sessions])[:, None]
    e = np.array([s.energy_kwh for s in sessions], dtype=float)[:, None]
    r = np.array([s.max_rate_kw for s in sessions], dtype=float)[:, None]
    dwell = d - a + 1
    for k in range(1, max_delay + 1):
        t = np.arange(T - k + 1)[None, :]
        n_in = np.clip(np.minimum(d, t + k - 1) - np.maximum(a, t) + 1, 0, None)
        in_energy = np.maximum(0.0, e - r * delta * (dwell - n_in)).sum(axis=0)
        u_sum = sliding_window_view(u, k).sum(axis=1)
        values[k - 1, : T - k + 1] = (u_sum - in_energy / delta) / k
    return values


def _cell(args) -> float:
    constraints, horizon, t, k, resolution_kwh = args
    return reduction_potential(constraints, horizon, Window(t, k), resolution_kwh)


def _resolve_workers(workers: int) -> int:
    if workers == 0:
        return os.cpu_count() or 1
    return max(1, workers)


def build_matrix(
    constraints: ConstraintSet,
    horizon: Horizon,
    max_delay: int,
    resolution_kwh: float = DEFAULT_RESOLUTION_KWH,
    workers: int = 1,
) -> ReductionPotentialMatrix:
    """Solve every window of 1..``max_delay`` slots independently and assemble the matrix.

    ``workers`` > 1 fans coupled (flow-solver) cells out to a process pool;
    ``0`` means one worker per CPU. Output does not depend on the worker count.
    """
    T = horizon.num_slots
    if not 1 <= max_delay <= T:
        raise ValueError(f"max_delay must be in [1, {T}], got {max_delay}")
    validate_feasibility(constraints, horizon)
    mask = valid_mask(max_delay, T)
    if constraints.is_separable:
        values = _separable_values(constraints, horizon, max_delay)
    else:
        cells = [(t, k) for k in range(1, max_delay + 1) for t in range(T - k + 1)]
        jobs = [(constraints, horizon, t, k, resolution_kwh) for t, k in cells]
        n_workers = _resolve_workers(workers)
        if n_workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(n_workers) as pool:
                results = list(pool.map(_cell, jobs, chunksize=max(1, len(jobs) // (4 * n_workers))))
        else:
            results = [_cell(job) for job in jobs]
        values = np.full((max_delay, T), np.nan)
        for (t, k), value in zip(cells, results):
            values[k - 1, t] = value
    return ReductionPotentialMatrix(
        horizon=horizon,
        max_delay_slots=max_delay,
        values=values,
        valid_mask=mask,
        normalization=Normalization.AGGREGATE,
        num_vehicles=max(1, len(constraints.sessions)),
        has_negative=bool(np.any(values[mask] < -NEGATIVE_TOL)),
    )


@dataclass(frozen=True)
class MonteCarloSpec:
    fleet_size: int = 100
    num_samples: int = 1000
    rng_seed: int = 0

    def __post_init__(self):
        if self.fleet_size < 1 or self.num_samples < 1:
            raise ValueError("fleet_size and num_samples must be >= 1")

    def sample_seed(self, j: int) -> int:
        """64-bit seed for sample ``j``, derived from ``rng_seed`` and ``j`` only."""
        seq = np.random.SeedSequence(self.rng_seed % 2**64, spawn_key=(j,))
        return int(seq.generate_state(1, np.uint64)[0])


def _sample_matrix(args) -> tuple[np.ndarray, bool]:
    from .fleetgen import sample_fleet

    archetype, spec, j, horizon, max_delay, global_capacity_kw, resolution_kwh = args
    sessions = sample_fleet(archetype, spec.fleet_size, horizon, spec.sample_seed(j))
    constraints = ConstraintSet(sessions, global_capacity_kw=global_capacity_kw)
    matrix = build_matrix(constraints, horizon, max_delay, resolution_kwh)
    return matrix.values, matrix.has_negative


def monte_carlo_matrix(
    archetype,
    spec: MonteCarloSpec,
    horizon: Horizon,
    max_delay: int,
    normalization: Union[str, Normalization] = Normalization.PER_VEHICLE,
    global_capacity_kw: Optional[float] = None,
    resolution_kwh: float = DEFAULT_RESOLUTION_KWH,
    workers: int = 1,
) -> ReductionPotentialMatrix:
    """Elementwise mean of matrices over ``spec.num_samples`` independently sampled fleets.

    Samples are summed in index order whatever the worker count, so results
    are bit-reproducible for a fixed ``spec.rng_seed``. With per-vehicle
    normalization the mean is divided by the fleet size.
    """
    normalization = Normalization.parse(normalization)
    jobs = [(archetype, spec, j, horizon, max_delay, global_capacity_kw, resolution_kwh)
            for j in range(spec.num_samples)]
    n_workers = _resolve_workers(workers)
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(n_workers) as pool:
            results = pool.map(_sample_matrix, jobs, chunksize=max(1, len(jobs) // (4 * n_workers)))
            total, negative = _accumulate(results)
    else:
        total, negative = _accumulate(map(_sample_matrix, jobs))
    mean = total / spec.num_samples
    if normalization is Normalization.PER_VEHICLE:
        mean = mean / spec.fleet_size
    return ReductionPotentialMatrix(
        horizon=horizon,
        max_delay_slots=max_delay,
        values=mean,
        valid_mask=valid_mask(max_delay, horizon.num_slots),
        normalization=normalization,
        num_vehicles=spec.fleet_size,
        has_negative=negative,
    )


def _accumulate(results) -> tuple[np.ndarray, bool]:
    total = None
    negative = False
    for values, flag in results:
        total = values.copy() if total is None else total + values
        negative = negative or flag
    return total, negative


# -- CSV ---------------------------------------------------------------------

HEADER_LABEL = "k\\t"


def _format(value: float) -> str:
    text = f"{value:.6f}"
    return "0.000000" if text == "-0.000000" else text


def matrix_to_csv(matrix: ReductionPotentialMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([HEADER_LABEL] + list(range(matrix.horizon.num_slots)))
    for k in range(1, matrix.max_delay_slots + 1):
        row = [
            _format(v) if ok else ""
            for v, ok in zip(matrix.values[k - 1], matrix.valid_mask[k - 1])
        ]
        writer.writerow([k] + row)
    return buf.getvalue()


def write_matrix_csv(matrix: ReductionPotentialMatrix, path: Union[str, Path]) -> None:
    Path(path).write_text(matrix_to_csv(matrix), encoding="utf-8", newline="")


def read_matrix_csv(
    path: Union[str, Path],
    slot_duration_hours: float = 1.0,
    start_hour: float = 0.0,
    normalization: Union[str, Normalization] = Normalization.AGGREGATE,
    num_vehicles: int = 1,
) -> ReductionPotentialMatrix:
    """Parse a matrix CSV. Empty fields become masked cells."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0].strip() not in (HEADER_LABEL, "k\t", "k"):
        raise ValueError(f"{path}: missing matrix header row")
    T = len(rows[0]) - 1
    body = [row for row in rows[1:] if row]
    values = np.full((len(body), T), np.nan)
    mask = np.zeros((len(body), T), dtype=bool)
    for i, row in enumerate(body):
        if int(row[0]) != i + 1 or len(row) != T + 1:
            raise ValueError(f"{path}: malformed row {i + 2}")
        for t, field in enumerate(row[1:]):
            if field != "":
                values[i, t] = float(field)
                mask[i, t] = True
    return ReductionPotentialMatrix(
        horizon=Horizon(T, slot_duration_hours, start_hour),
        max_delay_slots=len(body),
        values=values,
        valid_mask=mask,
        normalization=Normalization.parse(normalization),
        num_vehicles=num_vehicles,
        has_negative=bool(np.any(values[mask] < -NEGATIVE_TOL)),
    )
