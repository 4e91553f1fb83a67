"""Numerical checks for the regularity of Mumford-Shah crack tips.

Submodules: ``numerics`` (grids, quadrature, differences, roots), ``fields``
(tip fields and log-polar maps), ``spectrum`` (Ventsel eigenmodes),
``expansion``, ``linearized``, ``annuli``, ``identities``, ``nonlinear``
and ``cli``.
"""

from .errors import (ConfigError, CracktipError, DomainError, GridError, ParityError,
                     QuadratureError, RootFindingError)

__version__ = "0.1.0"

__all__ = ["ConfigError", "CracktipError", "DomainError", "GridError", "ParityError",
           "QuadratureError", "RootFindingError", "__version__"]
