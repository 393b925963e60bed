"""Hypothesis ledgers: named numeric checks with computed slack.

Every analytic multiplier route comes with sufficient conditions; the
checkers evaluate each condition numerically and return a ledger rather
than a bare boolean, so reports can show exactly which inequality held
and by how much.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = ["ConditionCheck", "ConditionLedger"]


@dataclass(frozen=True)
class ConditionCheck:
    """One verified inequality or identity.

    ``slack`` is positive when the condition holds with margin (its exact
    meaning is check-specific and documented by the checker).  Borderline
    marks a failure within 1e-6 relative of the bound.
    """

    name: str
    passed: bool
    value: float
    bound: float | None = None
    comparator: str = ""
    slack: float = math.nan
    borderline: bool = False
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "bound": self.bound,
            "comparator": self.comparator,
            "slack": self.slack,
            "borderline": self.borderline,
            "note": self.note,
        }

    def __str__(self) -> str:
        status = "pass" if self.passed else ("BORDERLINE" if self.borderline else "FAIL")
        rhs = "" if self.bound is None else f" {self.comparator} {self.bound:.6g}"
        note = f"  [{self.note}]" if self.note else ""
        return f"{self.name}: {self.value:.6g}{rhs} -> {status}{note}"


@dataclass
class ConditionLedger:
    """A list of checks plus the named constants they were computed from."""

    title: str
    checks: list[ConditionCheck] = field(default_factory=list)
    context: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def borderline(self) -> bool:
        return any(c.borderline for c in self.checks)

    def check(self, name: str) -> ConditionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def add(self, *args, **kwargs) -> ConditionCheck:
        c = ConditionCheck(*args, **kwargs)
        self.checks.append(c)
        return c

    def as_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
            "context": dict(sorted(self.context.items())),
        }

    def __str__(self) -> str:
        lines = [f"[{self.title}] {'PASS' if self.passed else 'FAIL'}"]
        lines += [f"  {c}" for c in self.checks]
        return "\n".join(lines)
