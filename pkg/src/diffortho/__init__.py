"""Polynomials orthogonal with respect to a Laguerre or Hermite differential
operator and a measure ``w / rho``: construction, identities, zeros,
asymptotics and the point-singularity flow model."""
from . import precision  # noqa: F401  (sets the working precision)
from .errors import DiffOrthoError
from .measures import MeasureSpec
from .polycore import BasisPoly, Case

__all__ = ["BasisPoly", "Case", "DiffOrthoError", "MeasureSpec"]
__version__ = "0.1.0"
