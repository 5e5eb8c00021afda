"""Three-valued check reports shared by the verifier and convergence ops.

Every universal quantifier in the workbench is budget-checked or covered by a
certificate; a report records which, so pass/fail/unknown survive export and
replay bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

PASS = "pass"
FAIL = "fail"
UNKNOWN = "unknown"
REJECTED = "rejected"


@dataclass
class Check:
    name: str
    status: str
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "status": self.status, "details": self.details}


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)
    budgets: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def add(self, name: str, status: str, **details) -> Check:
        check = Check(name, status, dict(details))
        self.checks.append(check)
        return check

    @property
    def verdict(self) -> str:
        statuses = {c.status for c in self.checks}
        if FAIL in statuses or REJECTED in statuses:
            return FAIL
        if UNKNOWN in statuses:
            return UNKNOWN
        return PASS

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.status in (FAIL, REJECTED)]

    def to_json(self) -> dict:
        return {
            "title": self.title,
            "verdict": self.verdict,
            "budgets": self.budgets,
            "notes": self.notes,
            "checks": [c.to_json() for c in self.checks],
        }
