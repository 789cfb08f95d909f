"""Exception and warning types shared across the package."""


class HallcondError(Exception):
    """Base class for all package-specific errors."""


class RegionEmpty(HallcondError):
    """A region construction produced no lattice sites."""


class GeometryError(HallcondError):
    """Operation not defined for the lattice geometry (e.g. step functions on a torus)."""


class ModelError(HallcondError):
    """Model parameters inconsistent with the requested builder."""


class SizeError(HallcondError):
    """A dimension or cost guard was exceeded."""


class GaplessError(HallcondError):
    """Spectrum has no gap at the requested chemical potential / coupling."""


class DegenerateGroundState(HallcondError):
    """Lowest eigenvalue is degenerate within tolerance."""


class NumericalError(HallcondError):
    """An assembled matrix violated a structural requirement (e.g. hermiticity)."""


class IntegrationError(HallcondError):
    """Time-ordered propagation failed step control."""


class ParamError(HallcondError):
    """Parameter guard violated."""


class StateError(HallcondError):
    """Required cached state (e.g. full eigensystem) is missing."""


class ConfigError(HallcondError):
    """Run configuration could not be parsed or validated."""


class QuadratureWarning(UserWarning):
    """Quadrature self-estimate exceeded the requested tolerance; result still returned."""
