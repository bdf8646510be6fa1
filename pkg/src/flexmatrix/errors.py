"""Exception types. Every error carries a short machine-readable ``code``."""

from __future__ import annotations


class FlexMatrixError(Exception):
    code = "error"


class SessionError(FlexMatrixError, ValueError):
    """A single charge session violates its own invariants."""

    code = "invalid_session"

    def __init__(self, message: str, vehicle_id: object = None):
        super().__init__(message)
        self.vehicle_id = vehicle_id


class InvalidParameter(SessionError):
    code = "invalid_parameter"


class InfeasibleEnergy(SessionError):
    code = "infeasible_energy"


class OutOfHorizon(SessionError):
    code = "out_of_horizon"


class BadOrdering(SessionError):
    code = "bad_ordering"


class JointlyInfeasible(FlexMatrixError):
    """No joint schedule delivers every vehicle's energy under the capacity limits."""

    code = "jointly_infeasible"

    def __init__(self, message: str, vehicle_ids=()):
        super().__init__(message)
        self.vehicle_ids = frozenset(vehicle_ids)


class CapacityGroupsPresent(FlexMatrixError):
    code = "capacity_groups_present"


class QuantizationOverflow(FlexMatrixError):
    code = "quantization_overflow"


class InstanceTooLarge(FlexMatrixError):
    code = "instance_too_large"


class ArchetypeInfeasible(FlexMatrixError):
    code = "archetype_infeasible"


class HorizonTooShort(FlexMatrixError):
    code = "horizon_too_short"


class EmptyFleet(FlexMatrixError):
    code = "empty_fleet"


class AllMasked(FlexMatrixError):
    code = "all_masked"
