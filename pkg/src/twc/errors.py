"""Exception hierarchy for the two-way channel toolkit.

Every error raised on purpose by the library derives from :class:`TwcError`,
so callers can catch the whole family at once.  The CLI maps the three
top-level groups onto exit codes (invalid input, non-convergence, search
budget).
"""

from __future__ import annotations


class TwcError(Exception):
    """Base class for all library errors."""


class InvalidInput(TwcError, ValueError):
    """Malformed or out-of-range input data."""


class NegativeEntry(InvalidInput):
    """A probability matrix contains a negative entry."""

    def __init__(self, row: int, col: int, value: float):
        super().__init__(f"negative entry {value!r} at row {row}, column {col}")
        self.row = row
        self.col = col
        self.value = value


class RowSumViolation(InvalidInput):
    """A row of a stochastic matrix does not sum to one."""

    def __init__(self, row: int, total: float):
        super().__init__(f"row {row} sums to {total!r}, expected 1")
        self.row = row
        self.total = total


class DimensionMismatch(InvalidInput):
    """Array shapes are incompatible with the declared alphabets."""


class ShapeMismatch(DimensionMismatch):
    """Kernels in a family do not share a common shape."""


class IndexOutOfRange(InvalidInput, IndexError):
    """A symbol index lies outside its alphabet."""


class OutOfRange(InvalidInput):
    """A scalar argument lies outside its admissible interval."""


class ParameterOutOfRange(OutOfRange):
    """A channel-family parameter is outside its admissible range."""


class UnknownFixture(InvalidInput, KeyError):
    """No fixture is registered under the requested name."""

    def __str__(self) -> str:  # KeyError would add quotes
        return str(self.args[0]) if self.args else ""


class NotInjective(InvalidInput):
    """A lookup table required to be one-to-one is not."""

    def __init__(self, table: str, argument: int):
        super().__init__(f"table {table} is not injective for argument {argument}")
        self.table = table
        self.argument = argument


class NotIrreducible(InvalidInput):
    """A Markov transition matrix has more than one closed class."""


class StructuralViolation(InvalidInput):
    """A channel with memory violates a structural hypothesis."""

    def __init__(self, hypothesis: str):
        super().__init__(f"structural hypothesis violated: {hypothesis}")
        self.hypothesis = hypothesis


class UnsupportedLimit(InvalidInput):
    """No computable form is available for a multi-letter entropy limit."""


class AlphabetTooLarge(InvalidInput):
    """An exhaustive decision procedure refuses an oversized alphabet."""


class UnsupportedScale(InvalidInput):
    """The requested computation exceeds the supported problem size."""


class NonConvergence(TwcError, ArithmeticError):
    """An iterative solver hit its iteration cap before certifying its result."""

    def __init__(self, message: str, gap: float | None = None):
        super().__init__(message)
        self.gap = gap


class SearchBudgetExceeded(TwcError):
    """An exhaustive search would exceed its configured budget."""


class InconsistentImplication(TwcError, AssertionError):
    """Checker verdicts contradict a proven implication between conditions.

    This always signals a defect in a checker, never a property of the
    channel under test.
    """
