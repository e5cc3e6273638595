"""Exception taxonomy shared by every twoscale module.

All validation failures raise a subclass of :class:`TwoscaleError`, so
callers (and the CLI) can distinguish bad input from internal bugs.
"""


class TwoscaleError(Exception):
    """Base class for all errors raised by this package."""


class ParamError(TwoscaleError):
    """A distribution or scaling parameter is outside its admissible range."""


class DomainError(TwoscaleError):
    """An exponent was evaluated at or beyond its domain supremum."""


class OrderError(TwoscaleError):
    """A derivative or expansion order beyond the supported range was requested."""


class NotRareError(TwoscaleError):
    """The requested threshold is not in the rare-event direction (u <= a*b)."""


class NoSolutionError(TwoscaleError):
    """The tilting equation has no solution on the admissible bracket."""


class UnsupportedSignError(TwoscaleError):
    """The mean of the outer process is non-positive; the slow-regime
    machinery has no solution there and the case is explicitly unsupported."""


class RegimeError(TwoscaleError):
    """An approximation was requested outside its timescale regime."""


class LatticeError(TwoscaleError):
    """A lattice adjustment was requested for a process with no lattice span."""


class SeriesUnavailable(TwoscaleError):
    """Closed-form series coefficients exist only for the built-in model pairs."""
