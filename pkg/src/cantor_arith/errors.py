"""Exception hierarchy shared by all modules.

Each class carries the CLI exit code it maps to, so the front end never has
to guess whether a failure is a configuration problem or a genuine fault.
"""

from __future__ import annotations


class CantorArithError(Exception):
    exit_code = 1


class ConfigError(CantorArithError, ValueError):
    exit_code = 2


class PreconditionError(CantorArithError, ValueError):
    """An operation was called outside its documented domain."""

    exit_code = 2


class EmptyOperandError(PreconditionError):
    pass


class GapConditionError(PreconditionError):
    pass


class BudgetExceeded(CantorArithError):
    exit_code = 3

    def __init__(self, required: int, budget: int, what: str = "covering"):
        self.required = required
        self.budget = budget
        super().__init__(f"{what} needs {required} items, budget is {budget}")


class VerificationError(CantorArithError):
    """An internal self-check (witness replay, identity check) failed."""

    exit_code = 4


class UnsupportedCase(CantorArithError):
    exit_code = 5
