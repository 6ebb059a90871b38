"""Exception hierarchy shared by every module."""


class PartialCSError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class NonFiniteInput(PartialCSError, ValueError):
    """An input array contains NaN or Inf."""


class DimensionMismatch(PartialCSError, ValueError):
    """Array shapes are incompatible."""


class RankDeficient(PartialCSError):
    """A matrix that must have full column rank does not."""


class NotSymmetric(PartialCSError, ValueError):
    """A matrix expected to be symmetric is not."""


class Infeasible(PartialCSError):
    """The constraint set of an optimization problem is empty."""


class Unbounded(PartialCSError):
    """A linear program has no finite optimum."""


class NumericalBreakdown(PartialCSError):
    """A pivot became too small to continue safely."""


class TooLarge(PartialCSError):
    """An exhaustive enumeration would exceed the configured cap."""


class DomainError(PartialCSError, ValueError):
    """A scalar parameter lies outside its admissible range."""


class NoSolution(PartialCSError):
    """No consistent vector was found within the search limits."""


class InsufficientData(PartialCSError):
    """Not enough usable trials to compute a statistic."""
