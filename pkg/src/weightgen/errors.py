"""Exception hierarchy.

Every error carries a stable machine-readable ``code`` (used by the CLI) and a
human message. Codes are CamelCase and never change once published.
"""

from __future__ import annotations


class WeightgenError(Exception):
    """Base class for all library errors."""

    code = "Error"
    exit_status = 3

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def oneline(self) -> str:
        return f"error[{self.code}]: {self.message}"


class GrammarSyntaxError(WeightgenError):
    """Source text rejected by the parser; carries a 1-based position."""

    code = "SyntaxError"

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class SpecError(WeightgenError):
    """Structural problem with a specification."""

    code = "SpecError"


class EpsilonCycleError(SpecError):
    code = "EpsilonCycle"

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(
            "size-preserving dependency cycle: " + " -> ".join(self.cycle + self.cycle[:1])
        )


class UnproductiveClassError(SpecError):
    code = "UnproductiveClass"


class NotStandardError(SpecError):
    code = "NotStandard"


class NotRegularError(SpecError):
    code = "NotRegular"


class NotContextFreeError(SpecError):
    code = "NotContextFree"


class EmptyClassAtSizeError(WeightgenError):
    code = "EmptyClassAtSize"
    exit_status = 4


class PeriodicSpecError(WeightgenError):
    code = "PeriodicSpec"
    exit_status = 4


class NoRootInRangeError(WeightgenError):
    code = "NoRootInRange"
    exit_status = 4


class DegenerateDerivativeError(WeightgenError):
    code = "DegenerateDerivative"
    exit_status = 4


class NoSolutionFoundError(WeightgenError):
    code = "NoSolutionFound"
    exit_status = 4


class InfeasibleTargetError(WeightgenError):
    """Heuristic signal: the optimizer collapsed without reaching tolerance."""

    code = "InfeasibleTarget"
    exit_status = 4

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class ZeroObservedFrequencyError(WeightgenError):
    code = "ZeroObservedFrequency"
    exit_status = 4


class EmptyFiberError(WeightgenError):
    code = "EmptyFiber"
    exit_status = 4


class DomainError(WeightgenError):
    code = "DomainError"
    exit_status = 4


class ResourceBudgetError(WeightgenError):
    code = "ResourceBudget"
    exit_status = 5


class TableCacheError(WeightgenError):
    code = "TableCache"
    exit_status = 3
