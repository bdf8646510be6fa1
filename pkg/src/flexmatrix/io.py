"""Sessions CSV and run-config JSON."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, TextIO, Union

from .core import CapacityGroup, ChargeSession, Horizon, validate_session
from .errors import SessionError
from .matrix import Normalization
from .solvers import DEFAULT_RESOLUTION_KWH

SESSION_COLUMNS = ("vehicle_id", "arrival_slot", "departure_slot", "energy_kwh", "max_rate_kw")


class ConfigError(ValueError):
    """Malformed input: bad config value, bad CSV row."""


def parse_sessions_csv(fh: TextIO, source: str = "<sessions>",
                       horizon: Optional[Horizon] = None) -> list[ChargeSession]:
    """Parse a sessions CSV; with ``horizon`` each row is also validated.

    Validation failures re-raise the original :class:`SessionError` type with
    the row number prefixed to the message.
    """
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != SESSION_COLUMNS:
        raise ConfigError(f"{source}: header must be {','.join(SESSION_COLUMNS)}")
    sessions = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(SESSION_COLUMNS):
            raise ConfigError(f"{source} row {lineno}: expected {len(SESSION_COLUMNS)} fields, got {len(row)}")
        vid, a, d, e, r = (cell.strip() for cell in row)
        try:
            session = ChargeSession(vid, int(a), int(d), float(e), float(r))
        except ValueError as exc:
            raise ConfigError(f"{source} row {lineno}: {exc}") from None
        if horizon is not None:
            try:
                validate_session(session, horizon)
            except SessionError as exc:
                raise type(exc)(f"{source} row {lineno}: {exc}", exc.vehicle_id) from None
        sessions.append(session)
    return sessions


def read_sessions_csv(path: Union[str, Path], horizon: Optional[Horizon] = None) -> list[ChargeSession]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_sessions_csv(fh, str(path), horizon)


def sessions_to_csv(sessions: Sequence[ChargeSession]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SESSION_COLUMNS)
    for s in sessions:
        writer.writerow([s.vehicle_id, s.arrival_slot, s.departure_slot, repr(float(s.energy_kwh)),
                         repr(float(s.max_rate_kw))])
    return buf.getvalue()


def write_sessions_csv(sessions: Sequence[ChargeSession], path: Union[str, Path]) -> None:
    Path(path).write_text(sessions_to_csv(sessions), encoding="utf-8", newline="")


@dataclass
class RunConfig:
    """Everything one CLI run needs. Exactly one of ``sessions_path`` / ``archetype`` is set."""

    horizon: Horizon = field(default_factory=lambda: Horizon(48, 1.0, 12.0))
    max_delay: int = 12
    normalization: Optional[Normalization] = None
    capacity_groups: list = field(default_factory=list)
    global_capacity_kw: Optional[float] = None
    sessions_path: Optional[Path] = None
    archetype: Optional[str] = None
    fleet_size: int = 100
    samples: int = 1000
    seed: int = 0
    out_csv: Optional[Path] = None
    out_svg: Optional[Path] = None
    threads: int = 1
    resolution_kwh: float = DEFAULT_RESOLUTION_KWH

    def effective_normalization(self) -> Normalization:
        if self.normalization is not None:
            return self.normalization
        return Normalization.PER_VEHICLE if self.archetype else Normalization.AGGREGATE

    def validate(self) -> None:
        if (self.sessions_path is None) == (self.archetype is None):
            raise ConfigError("exactly one of sessions or archetype must be given")
        if not 1 <= self.max_delay <= self.horizon.num_slots:
            raise ConfigError(f"max_delay must be in [1, {self.horizon.num_slots}], got {self.max_delay}")
        if self.archetype and self.capacity_groups:
            raise ConfigError("capacity_groups reference vehicle ids and need a sessions file")
        if self.fleet_size < 1 or self.samples < 1:
            raise ConfigError("fleet_size and samples must be >= 1")
        if self.threads < 0:
            raise ConfigError("threads must be >= 0")


def _resolve(base: Path, value) -> Optional[Path]:
    if value is None:
        return None
    if str(value) in ("freight", "transit"):
        return value
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_config(path: Union[str, Path]) -> RunConfig:
    """Read a JSON run config; relative paths resolve against the config's directory."""
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(data, path.parent)


def config_from_dict(data: dict, base: Path = Path(".")) -> RunConfig:
    known = {
        "num_slots", "slot_duration_hours", "horizon_start_hour", "max_delay", "normalization",
        "capacity_groups", "global_capacity_kw", "sessions", "archetype", "fleet_size", "samples",
        "seed", "out_csv", "out_svg", "threads", "resolution_kwh",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        horizon = Horizon(
            int(data.get("num_slots", 48)),
            float(data.get("slot_duration_hours", 1.0)),
            float(data.get("horizon_start_hour", 12.0)),
        )
        groups = [
            CapacityGroup(frozenset(str(m) for m in g["members"]), float(g["capacity_kw"]))
            for g in data.get("capacity_groups", [])
        ]
        archetype = data.get("archetype")
        config = RunConfig(
            horizon=horizon,
            max_delay=int(data.get("max_delay", 12)),
            normalization=Normalization.parse(data["normalization"]) if data.get("normalization") else None,
            capacity_groups=groups,
            global_capacity_kw=None if data.get("global_capacity_kw") is None else float(data["global_capacity_kw"]),
            sessions_path=_resolve(base, data.get("sessions")),
            archetype=None if archetype is None else str(_resolve(base, archetype)),
            fleet_size=int(data.get("fleet_size", 100)),
            samples=int(data.get("samples", 1000)),
            seed=int(data.get("seed", 0)),
            out_csv=_resolve(base, data.get("out_csv")),
            out_svg=_resolve(base, data.get("out_svg")),
            threads=int(data.get("threads", 1)),
            resolution_kwh=float(data.get("resolution_kwh", DEFAULT_RESOLUTION_KWH)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    return config
