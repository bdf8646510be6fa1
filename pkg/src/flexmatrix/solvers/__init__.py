from .base import MinLoadSolution, Window
from .flow import DEFAULT_RESOLUTION_KWH, FlowNetwork, check_joint_feasibility, min_load_flow
from .oracle import min_load_oracle, oracle_gap_kwh
from .separable import min_in_window_energy, min_load_separable


def min_load(constraints, horizon, window, resolution_kwh=DEFAULT_RESOLUTION_KWH):
    """Dispatch to the closed form when possible, else to the flow solver."""
    if constraints.is_separable:
        return min_load_separable(constraints, horizon, window)
    return min_load_flow(constraints, horizon, window, resolution_kwh)


__all__ = [
    "DEFAULT_RESOLUTION_KWH",
    "FlowNetwork",
    "MinLoadSolution",
    "Window",
    "check_joint_feasibility",
    "min_in_window_energy",
    "min_load",
    "min_load_flow",
    "min_load_oracle",
    "min_load_separable",
    "oracle_gap_kwh",
]
