"""Structured pass/fail evidence for axiom suites."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class LawCheck:
    law: str
    passed: bool
    samples_tested: int
    witness: dict | None = None
    margin: float | None = None
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return _jsonable({
            "law": self.law,
            "passed": self.passed,
            "samples_tested": self.samples_tested,
            "witness": self.witness,
            "margin": self.margin,
            "flags": self.flags,
        })


@dataclass
class LawReport:
    """Outcome of one axiom suite.

    ``counters`` records how many pair/triple evaluations were performed and
    ``seed`` is set whenever the suite had to subsample.
    """

    suite_name: str
    checks: list[LawCheck] = field(default_factory=list)
    tolerances: dict[str, float] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, law: str) -> LawCheck:
        for c in self.checks:
            if c.law == law:
                return c
        raise KeyError(law)

    def failed(self) -> list[LawCheck]:
        return [c for c in self.checks if not c.passed]

    def add(self, check: LawCheck) -> LawCheck:
        self.checks.append(check)
        return check

    def to_dict(self) -> dict:
        return _jsonable({
            "suite": self.suite_name,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "tolerances": self.tolerances,
            "counters": self.counters,
            "seed": self.seed,
        })

    def summary(self) -> str:
        lines = [f"{self.suite_name}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            status = "ok " if c.passed else "FAIL"
            extra = f"  witness={c.to_dict()['witness']}" if c.witness and not c.passed else ""
            lines.append(f"  [{status}] {c.law} ({c.samples_tested} samples){extra}")
        return "\n".join(lines)
