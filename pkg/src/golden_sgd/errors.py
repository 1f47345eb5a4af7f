"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ShapeError(ValueError):
    """Tensor shapes are inconsistent."""


class DivergenceError(ArithmeticError):
    """A quantity diverges (e.g. log of zero) for the requested input."""


class NonFiniteGradientError(FloatingPointError):
    """A gradient handed to an optimizer contains NaN or Inf."""

    def __init__(self, name):
        super().__init__(f"non-finite gradient for parameter {name!r}")
        self.name = name


class FormatError(ValueError):
    """A file does not follow the expected binary layout."""


class ConsistencyError(ValueError):
    """Two related inputs disagree (e.g. image and label counts)."""


class TruncationError(FormatError):
    """A file ends before its header says it should."""


class DegenerateSplitError(ValueError):
    """Subsampling would leave a class empty."""


class InsufficientDataError(ValueError):
    """Fewer values than the operation needs."""


class UndefinedTestError(ValueError):
    """A statistical test is undefined for the given sample."""


class NoCandidateError(ValueError):
    """No record qualifies for selection."""
