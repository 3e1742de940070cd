"""Exception hierarchy shared by all modules."""


class WSurfError(Exception):
    """Base class for all errors raised by wsurf."""


class DomainError(WSurfError, ValueError):
    """A value of nu left the admissible interval, or f - g came too close to 0."""


class NotPrincipalError(WSurfError, ValueError):
    """F or M is not (numerically) zero, so (u, v) are not principal parameters."""


class SingularFieldError(WSurfError, ValueError):
    """A starred operator met a field value too close to zero."""


class NonConvergenceError(WSurfError, RuntimeError):
    """Iteration budget exhausted.

    The best field and residual reached are kept on the exception so callers
    can inspect or continue from them.
    """

    def __init__(self, message, best=None, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class CflError(WSurfError, ValueError):
    """Hyperbolic marching requested with h_v > h_u."""


class ParamError(WSurfError, ValueError):
    """Class parameters p, q violate the constraints of their class."""


class CompatibilityError(WSurfError, ValueError):
    """Frame integration depends on the path beyond tolerance."""


class FrameDriftError(WSurfError, RuntimeError):
    """Orthonormality drift of one integration step exceeded the threshold."""


class SingularOffsetError(WSurfError, ValueError):
    """A parallel offset hits 1 - a*nu_i = 0 or changes epsilon on the grid."""


class DegenerateError(WSurfError, ValueError):
    """A linear relation with alpha^2 - beta^2 + 4 gamma delta = 0 (or H' = 0)."""


DegenerateRelationError = DegenerateError


class UmbilicError(DegenerateError):
    """The excluded fractional case A = D, B = C = 0."""
