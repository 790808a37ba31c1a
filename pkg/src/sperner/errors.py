"""Exception hierarchy shared by every module."""


class SpernerError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(SpernerError, ValueError):
    pass


class OutOfDomainError(SpernerError, ValueError):
    """A construction was requested outside the range where it is guaranteed."""


class PreconditionError(SpernerError, ValueError):
    pass


class InternalInconsistencyError(SpernerError, AssertionError):
    """A certificate that must always hold failed. Indicates a bug."""


class SearchBudgetError(SpernerError, RuntimeError):
    """Search space exceeds the node budget and pruning is disabled."""
