"""Exception hierarchy shared by all modules."""


class GammaStabError(Exception):
    """Base class for every error raised by this package."""


# frames
class EmptyIndexSet(GammaStabError, ValueError):
    pass


class GridTooCoarse(GammaStabError, ValueError):
    pass


class NotHermitian(GammaStabError, ValueError):
    pass


class ToleranceNotAchievable(GammaStabError, ArithmeticError):
    pass


class NonPositiveDecay(GammaStabError, ValueError):
    pass


# gaussian
class DimensionMismatch(GammaStabError, ValueError):
    pass


class ExactPathUnavailable(GammaStabError, ValueError):
    pass


class DegenerateFamily(GammaStabError, ValueError):
    pass


# semigroup
class EigenSolverFailure(GammaStabError, ArithmeticError):
    pass


class SpectrumHit(GammaStabError, ArithmeticError):
    pass


class NotStable(GammaStabError):
    """The generator is not Hurwitz, so the requested infinite-horizon object does not exist."""


class EmptyFamily(GammaStabError, ValueError):
    pass


class ConservativenessViolation(GammaStabError, AssertionError):
    """Computed spectral bound contradicts the certified one; indicates a numerical bug."""


class SeriesDiverges(GammaStabError, ArithmeticError):
    pass


# scp
class MarginExceeded(GammaStabError, ValueError):
    pass


class ShiftSearchFailed(GammaStabError, ArithmeticError):
    pass


# cli
class ParseError(GammaStabError, ValueError):
    pass


class ValidationError(GammaStabError, ValueError):
    pass
