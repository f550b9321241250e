"""Exception types raised across the package."""


class LeakyCavityError(Exception):
    """Base class for all errors raised by leakycav."""


class SingularLoop(LeakyCavityError):
    """The feedback-loop denominator of a replacement scheme is (nearly) zero."""


class NonAdmissiblePoint(LeakyCavityError):
    """A parametrization could not be evaluated on a finite-difference stencil."""


class ZeroReflection(LeakyCavityError):
    """The matched-input-mode reflection efficiency vanishes (degenerate cavity)."""


class GridTooCoarse(LeakyCavityError):
    """A time grid is too coarse (or not uniform) for the requested quadrature."""


class NonOrthonormalBasis(LeakyCavityError):
    pass


class TruncationTooSmall(LeakyCavityError):
    """Fock-space truncation loses more probability than ``tail_tol`` allows."""


class SeriesDiverging(LeakyCavityError):
    """The photocount series fails its tail-bound test."""


class DomainError(LeakyCavityError, ValueError):
    pass


class EmptySamples(LeakyCavityError, ValueError):
    pass


class DegenerateScheme(LeakyCavityError):
    """Off-origin reconstruction was requested from a cavity without mode matching."""


class NoIntersection(LeakyCavityError):
    pass


class ConfigError(LeakyCavityError, ValueError):
    pass
