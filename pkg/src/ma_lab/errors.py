"""Exception types raised across the package."""


class MALabError(ValueError):
    """Base class for configuration and input errors."""


class GeometryError(MALabError):
    """An antenna geometry violates its structural invariants."""


class InfeasibleError(MALabError):
    """A placement problem has no feasible point for the given parameters."""


class UnsupportedConfiguration(MALabError):
    """The requested construction only exists for other parameter values."""


class DegenerateInputError(MALabError):
    """An input makes a formula singular (zero variance, coincident points)."""


class PerturbationRequired(DegenerateInputError):
    """Two reference antennas coincide, so the spacing surrogate is undefined."""
