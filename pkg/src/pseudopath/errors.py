"""Exception hierarchy.

Every error raised by the library derives from :class:`PseudopathError`, so
callers (and the CLI) can catch the whole family at once.  Errors that signal
an invalid request rather than a failed computation also derive from
:class:`ValueError`.
"""


class PseudopathError(Exception):
    """Base class for all library errors."""


class InadmissibleSpec(PseudopathError, ValueError):
    pass


class TimeTooSmall(PseudopathError, ValueError):
    pass


class GridTooNarrow(PseudopathError):
    pass


class NotIntegrable(PseudopathError):
    pass


class GridMismatch(PseudopathError, ValueError):
    pass


class SpecMismatch(PseudopathError, ValueError):
    pass


class NegativeVariation(PseudopathError, ValueError):
    pass


class NotARefinement(PseudopathError, ValueError):
    pass


class DimensionMismatch(PseudopathError, ValueError):
    pass


class InconsistentRepresentations(PseudopathError):
    pass


class SliceTooSmall(PseudopathError, ValueError):
    pass


class NoConvergence(PseudopathError):
    pass


class SingularOperator(PseudopathError):
    pass


class DimensionTooLarge(PseudopathError, ValueError):
    pass


class LadderDivergence(PseudopathError):
    pass


class NonNested(PseudopathError, ValueError):
    pass
