"""Exception hierarchy shared by every module of the package."""


class CurvedNBodyError(Exception):
    """Base class for all package errors."""


class NotProjectable(CurvedNBodyError, ValueError):
    """A point cannot be rescaled onto the constraint manifold."""


class LengthMismatch(CurvedNBodyError, ValueError):
    pass


class OffManifold(CurvedNBodyError, ValueError):
    """Input data violates the manifold or tangency constraint."""


class DegenerateSize(CurvedNBodyError, ValueError):
    """A size scalar leaves no valid planar radius (bodies would coincide)."""


class SingularConfiguration(CurvedNBodyError):
    """Two bodies collide (or are antipodal on the sphere)."""

    def __init__(self, i: int, j: int, value: float):
        self.i = i
        self.j = j
        self.value = value
        super().__init__(
            f"singular pair ({i}, {j}): |sigma - sigma*(qi.qj)^2| = {value:.3e}"
        )


class SingularPair(CurvedNBodyError, ValueError):
    """A criterion or residual denominator vanishes."""


class StepUnderflow(CurvedNBodyError):
    def __init__(self, t: float, h: float, min_step: float):
        self.t = t
        self.h = h
        super().__init__(f"step size {h:.3e} fell below min_step={min_step:.1e} at t={t:.17g}")


class DomainError(CurvedNBodyError, ValueError):
    """Argument outside the domain of the interaction kernel."""


class NotHyperbolicClass(CurvedNBodyError, ValueError):
    pass


class ConfigError(CurvedNBodyError, ValueError):
    pass
