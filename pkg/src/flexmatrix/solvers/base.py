from __future__ import annotations

from dataclasses import dataclass

from ..core import ChargeSession, Horizon, LoadProfile


@dataclass(frozen=True)
class Window:
    """The ``length_slots`` consecutive slots starting at ``start_slot``."""

    start_slot: int
    length_slots: int

    def __post_init__(self):
        if self.start_slot < 0 or self.length_slots < 1:
            raise ValueError(f"invalid window (t={self.start_slot}, k={self.length_slots})")

    @property
    def stop_slot(self) -> int:
        return self.start_slot + self.length_slots

    def fits(self, horizon: Horizon) -> bool:
        return self.stop_slot <= horizon.num_slots

    def check(self, horizon: Horizon) -> None:
        if not self.fits(horizon):
            raise ValueError(
                f"window (t={self.start_slot}, k={self.length_slots}) overruns horizon of {horizon.num_slots} slots"
            )

    def __contains__(self, slot: int) -> bool:
        return self.start_slot <= slot < self.stop_slot

    def overlap(self, session: ChargeSession) -> int:
        """Number of the session's dwell slots that fall inside the window."""
        lo = max(self.start_slot, session.arrival_slot)
        hi = min(self.stop_slot - 1, session.departure_slot)
        return max(0, hi - lo + 1)


@dataclass(frozen=True)
class MinLoadSolution:
    window: Window
    schedule: LoadProfile
    in_window_energy_kwh: float
