"""Exception types shared across the package."""


class PomdpEvalError(Exception):
    """Base class for all package errors."""


class InvalidInputError(PomdpEvalError):
    """An argument is out of range or dimensionally inconsistent."""


class ScenarioValidationError(PomdpEvalError):
    """A scenario table failed validation; the message names the offending row."""


class BudgetExceededError(PomdpEvalError):
    """An exhaustive enumeration would exceed the configured node budget."""


class TruncationError(PomdpEvalError):
    """A horizon is too small for the declared support of an evaluation."""
