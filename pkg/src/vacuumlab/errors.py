"""Exception hierarchy shared across the lab."""


class VacuumLabError(Exception):
    """Base class for all errors raised by vacuumlab."""


class ResolutionError(VacuumLabError):
    """A kernel, spike or frequency is too fine for the grid."""


class InfeasibleKernelError(VacuumLabError):
    """No transition steepness yields a unit-mass plateau kernel."""


class DomainExhaustedError(VacuumLabError):
    """Mollification radius leaves no interior time slices."""


class EmptyOverlapError(VacuumLabError):
    """A shift leaves no overlap between the domain and its translate."""


class GridMemoryError(VacuumLabError):
    """Requested grid exceeds the configured node cap."""


class NegativityError(VacuumLabError):
    """A density field carries negative samples."""


class VacuumSingularityError(VacuumLabError):
    """A pressure-potential derivative was requested at zero density."""


class AdmissibilityError(VacuumLabError):
    """Requested shock states violate the Lax conditions."""


class BlowupTimeError(VacuumLabError):
    """Simple-wave horizon exceeds the characteristic blow-up time."""


class ExponentRelationError(VacuumLabError):
    """Integrability exponents violate the required relation."""


class BoundaryConditionError(VacuumLabError):
    """Normal velocity at the interval boundary exceeds tolerance."""


class ConfigError(VacuumLabError):
    """Malformed or inconsistent experiment configuration."""
