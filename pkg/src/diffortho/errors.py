"""Exception hierarchy.

Every error carries a short ``code`` (``E_MEASURE``, ``E_NOCONV``, ...) that the
command line front end maps onto exit statuses.
"""
from __future__ import annotations


class DiffOrthoError(Exception):
    code = "E_INTERNAL"

    def __str__(self) -> str:
        msg = super().__str__()
        return f"{self.code}: {msg}" if msg else self.code


class RangeError(DiffOrthoError):
    code = "E_RANGE"


class MeasureError(DiffOrthoError, ValueError):
    code = "E_MEASURE"


class BasisError(DiffOrthoError, ValueError):
    code = "E_BASIS"


class ShapeError(DiffOrthoError, ValueError):
    code = "E_SHAPE"


class EigenError(DiffOrthoError):
    code = "E_EIG"


class ConvergenceError(DiffOrthoError):
    code = "E_NOCONV"


class SingularError(DiffOrthoError):
    code = "E_SINGULAR"


class BranchError(DiffOrthoError, ValueError):
    code = "E_BRANCH"


class RegionError(DiffOrthoError, ValueError):
    code = "E_REGION"


class EmptyCurveError(DiffOrthoError):
    code = "E_EMPTY"


class CollisionError(DiffOrthoError, ValueError):
    code = "E_COLLIDE"


class PoleError(DiffOrthoError, ValueError):
    code = "E_POLE"


class DegenerateError(DiffOrthoError):
    code = "E_DEGENERATE"


class InvariantError(DiffOrthoError):
    """An internal consistency check failed."""

    code = "E_INVARIANT"
