"""Exception types raised across the package."""


class CracktipError(Exception):
    """Base class for all package errors."""


class GridError(CracktipError, ValueError):
    """A grid is too small, non-uniform, or incompatible with another grid."""


class ParityError(CracktipError, ValueError):
    """A sample does not have the parity an operation requires."""


class DomainError(CracktipError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class RootFindingError(CracktipError, RuntimeError):
    """Bisection could not be started or did not converge."""


class QuadratureError(CracktipError, RuntimeError):
    """A quadrature could not be carried out as requested."""


class ConfigError(CracktipError, ValueError):
    """A configuration file or flag is malformed, unknown, or out of range."""
