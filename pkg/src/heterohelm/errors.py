"""Exception hierarchy shared by all modules."""


class HelmholtzError(Exception):
    """Base class for every error raised by the package."""


class NonPositiveDensity(HelmholtzError, ValueError):
    pass


class UnsupportedIndex(HelmholtzError, ValueError):
    pass


class UnsupportedBoundary(HelmholtzError, ValueError):
    pass


class OutOfDomain(HelmholtzError, ValueError):
    pass


class NonPositiveGamma(HelmholtzError, ValueError):
    pass


class ZeroModePresent(HelmholtzError, ValueError):
    pass


class InsufficientTruncation(HelmholtzError, ValueError):
    pass


class TooShort(HelmholtzError, ValueError):
    pass


class UnsupportedModel(HelmholtzError, ValueError):
    pass


class ResolutionTooLow(HelmholtzError, ValueError):
    pass


class ConfigError(HelmholtzError, ValueError):
    pass


class NumericalFailure(HelmholtzError, ArithmeticError):
    """Iteration failure; ``report`` carries the partial result when available."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class LostOverlap(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class RankCollapse(NumericalFailure):
    pass


class DegenerateSubspace(NumericalFailure):
    pass
