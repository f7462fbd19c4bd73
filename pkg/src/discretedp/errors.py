"""Exception hierarchy shared across the package.

Everything raised on purpose derives from DiscreteDpError so callers can
catch package failures without swallowing genuine bugs (TypeError etc.).
"""


class DiscreteDpError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParam(DiscreteDpError):
    """A parameter is outside its documented domain (e.g. zero denominator)."""


class EntropyExhausted(DiscreteDpError):
    """A replay entropy source ran out of scripted bytes mid-sample."""


class PrecisionError(DiscreteDpError):
    """An interval computation stayed indecisive at the maximum precision."""


class IterationCapExceeded(DiscreteDpError):
    """A rejection loop hit its explicit iteration cap."""


class StateExplosion(DiscreteDpError):
    """Loop unrolling visited more states than the caller allowed."""


class EnumerationTooLarge(DiscreteDpError):
    """A database enumeration exceeded the configured pair limit."""


class SystemMismatch(DiscreteDpError):
    """Mechanisms under different accounting systems were combined."""


class SupportMismatch(DiscreteDpError):
    """Absolute continuity fails: mass on a point the base distribution lacks."""


class BudgetExhausted(DiscreteDpError):
    """A query claims more privacy budget than the ledger has left."""


class DegenerateCells(DiscreteDpError):
    """Too few usable cells remain after merging to run a chi-squared test."""
