"""Exception hierarchy shared across the package."""


class WinPredError(Exception):
    """Base class for all validation and data errors raised by winpred."""


# -- data loading / validation -------------------------------------------

class MalformedRow(WinPredError):
    """A CSV row has the wrong column count or an unparseable field."""


class InvariantViolation(WinPredError):
    """A record violates a structural invariant (team size, hero range, ...)."""


class DuplicateMatchId(WinPredError):
    pass


class UnknownMatchId(WinPredError):
    pass


class NonMonotoneCumulative(WinPredError):
    """A cumulative metric decreased between consecutive minutes."""


class MissingMinute(WinPredError):
    pass


class DuplicateMinute(WinPredError):
    pass


class EmptySelection(WinPredError):
    """A filter left no matches to aggregate."""


class InvalidConfig(WinPredError):
    pass


# -- featurization --------------------------------------------------------

class HeroOutOfRange(WinPredError):
    pass


class MissingSample(WinPredError):
    pass


class MatchTooShort(WinPredError):
    pass


class WindowBelowMinimum(WinPredError):
    """Window end minute below 5; gradients would lack a predecessor."""


# -- models ----------------------------------------------------------------

class SingleClassData(WinPredError):
    pass


class DimensionMismatch(WinPredError):
    pass


class NonFiniteFeature(WinPredError):
    pass


class EmptyData(WinPredError):
    pass


# -- selection / evaluation -------------------------------------------------

class TooFewRows(WinPredError):
    pass


class EmptySide(WinPredError):
    """A train/test split produced an empty side."""


class UnknownTournament(WinPredError):
    pass


class EmptyDataset(WinPredError):
    pass


class UnknownFeature(WinPredError):
    """A named feature does not exist in the chosen representation."""
