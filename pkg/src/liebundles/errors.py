"""Exception types shared across the package."""


class UsageError(ValueError):
    """Arguments are well-typed but violate an operation's contract."""


class NumericalDomainError(ArithmeticError):
    """A computation produced a non-finite value."""


class RegularityError(ArithmeticError):
    """A Lagrangian's fiber derivative cannot be inverted."""


class ContractError(UsageError):
    """The requested quantity is not defined for this input, by design."""


class ScenarioError(UsageError):
    """A reduction scenario is inconsistent, e.g. the Hamiltonian is not invariant."""


class ExpressionError(ValueError):
    """Observable source text failed to parse or validate.

    ``line`` and ``column`` are 1-based when known.
    """

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class IntegrationAbort(ArithmeticError):
    """Integration hit a non-finite state; ``last_index`` is the last good step."""

    def __init__(self, message, last_index):
        super().__init__(message)
        self.last_index = last_index
