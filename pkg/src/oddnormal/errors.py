"""Exception types shared across the package."""

from __future__ import annotations


class ScheduleError(ValueError):
    """Invalid schedule, or a query outside its materialized range."""


class DepthSaturation(ScheduleError):
    """A computation needs blocks beyond the materialization cap."""


class PrecisionStarvation(ValueError):
    def __init__(self, required: int, available: int):
        super().__init__(
            f"precision starvation: need P >= {required} bits, have {available}"
        )
        self.required = required
        self.available = available


class HypothesisViolation(ValueError):
    """The input does not satisfy the hypothesis a certificate relies on."""


class BudgetExceeded(RuntimeError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
