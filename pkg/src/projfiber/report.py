"""Check verdicts shared by all decision procedures."""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


class Verdict(enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    INCONCLUSIVE = "Inconclusive"


class Method(enum.Enum):
    SYMBOLIC = "Symbolic"
    NUMERIC = "Numeric"


@dataclass(frozen=True)
class CheckReport:
    verdict: Verdict
    method: Method
    max_residual: float = 0.0
    witness: tuple[float, ...] | None = None
    details: str = ""

    def __post_init__(self):
        if self.witness is not None:
            object.__setattr__(self, "witness", tuple(float(c) for c in self.witness))
        if self.verdict is Verdict.FAIL and self.witness is None:
            raise ValueError("a failing report needs a witness point")

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "method": self.method.value,
            "max_residual": float(self.max_residual),
            "witness": list(self.witness) if self.witness is not None else None,
            "details": self.details,
        }


def combine(reports: Sequence[CheckReport], details: str = "") -> CheckReport:
    """Worst verdict wins: Fail > Inconclusive > Pass."""
    if not reports:
        return CheckReport(Verdict.PASS, Method.SYMBOLIC, 0.0, None, details or "nothing to check")
    method = Method.SYMBOLIC if all(r.method is Method.SYMBOLIC for r in reports) else Method.NUMERIC
    residual = max(float(r.max_residual) for r in reports)
    for verdict in (Verdict.FAIL, Verdict.INCONCLUSIVE):
        bad = [r for r in reports if r.verdict is verdict]
        if bad:
            first = bad[0]
            return CheckReport(verdict, method, residual, first.witness, "; ".join(filter(None, [details, first.details])))
    return CheckReport(Verdict.PASS, method, residual, None, details)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Order-preserving map; ``threads=0`` means one worker per CPU."""
    items = list(items)
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
