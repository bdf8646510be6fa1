"""Reduction potential matrices for EV fleet charging flexibility."""

from .core import (
    CapacityGroup,
    ChargeSession,
    ConstraintSet,
    Horizon,
    LoadProfile,
    uncoordinated_profile,
    validate_feasibility,
    validate_session,
)
from .fleetgen import (
    FleetArchetype,
    TruncatedNormal,
    empirical_dwell_probability,
    load_archetype,
    sample_fleet,
    slack_distribution,
)
from .heatmap import render_heatmap
from .matrix import (
    MonteCarloSpec,
    Normalization,
    ReductionPotentialMatrix,
    build_matrix,
    monte_carlo_matrix,
    read_matrix_csv,
    reduction_potential,
    write_matrix_csv,
)
from .solvers import MinLoadSolution, Window, min_load, min_load_flow, min_load_oracle, min_load_separable

__version__ = "0.1.0"
