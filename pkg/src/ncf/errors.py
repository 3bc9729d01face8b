"""Shared exception types and the compute-budget guard."""

import os

DEFAULT_BUDGET = 200_000_000


class BudgetExceededError(RuntimeError):
    """An operation would exceed the configured compute budget."""


class FitError(RuntimeError):
    """A regression fit could not be performed (too few admissible points)."""


def budget_cap() -> int:
    """Compute cap in abstract cost units; NCF_BUDGET overrides the default."""
    raw = os.environ.get("NCF_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    return int(raw)


def charge(cost: float, what: str) -> None:
    cap = budget_cap()
    if cost > cap:
        raise BudgetExceededError(
            f"{what}: estimated cost {cost:.3g} exceeds budget {cap} "
            "(set NCF_BUDGET to raise the cap)"
        )
