"""Check reports, certificates, digests, and rendering.

Reports serialize to JSON with a mandatory schema version; the digest
excludes wall time so identical inputs give byte-identical digests.
Exit-code convention: 0 PASS, 1 FAIL, 2 BUDGET, 3 input error.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Any, Optional

SCHEMA_VERSION = 1

PASS = "PASS"
FAIL = "FAIL"
BUDGET = "BUDGET"

EXIT_CODES = {PASS: 0, FAIL: 1, BUDGET: 2}
EXIT_INPUT_ERROR = 3


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def stable_digest(value: Any) -> str:
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


@dataclass
class CheckReport:
    name: str
    params: dict[str, Any] = field(default_factory=dict)
    verdict: str = PASS
    validity: Optional[int] = None
    counters: dict[str, int] = field(default_factory=dict)
    witness: Optional[dict[str, Any]] = None
    certificate: Optional[dict[str, Any]] = None
    notes: list[str] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0

    def body(self) -> dict[str, Any]:
        """Everything except wall time; this is what gets digested."""
        out: dict[str, Any] = {
            "schema": SCHEMA_VERSION,
            "check": self.name,
            "params": self.params,
            "verdict": self.verdict,
            "validity": self.validity,
            "counters": self.counters,
            "notes": self.notes,
            "details": self.details,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        if self.certificate is not None:
            out["certificate"] = self.certificate
        return out

    def digest(self) -> str:
        return stable_digest(self.body())

    def to_json(self) -> dict[str, Any]:
        out = self.body()
        out["wall_time_s"] = round(self.wall_time, 6)
        out["digest"] = self.digest()
        return out

    def exit_code(self) -> int:
        return EXIT_CODES.get(self.verdict, EXIT_INPUT_ERROR)

    def line(self) -> str:
        return f"[{self.verdict}] {self.name}"


class Stopwatch:
    def __enter__(self) -> "Stopwatch":
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc) -> None:
        self.elapsed = time.perf_counter() - self.t0


def merge_reports(name: str, parts: list[CheckReport], params: Optional[dict] = None) -> CheckReport:
    """Conjunction of sub-reports: FAIL dominates BUDGET dominates PASS."""
    verdict = PASS
    for p in parts:
        if p.verdict == FAIL:
            verdict = FAIL
            break
        if p.verdict == BUDGET:
            verdict = BUDGET
    counters: dict[str, int] = {}
    for p in parts:
        for k, v in p.counters.items():
            counters[k] = counters.get(k, 0) + v
    validities = [p.validity for p in parts if p.validity is not None]
    rep = CheckReport(
        name,
        params=params or {},
        verdict=verdict,
        validity=min(validities) if validities else None,
        counters=counters,
        notes=[n for p in parts for n in p.notes],
        details={"parts": [p.body() for p in parts]},
        wall_time=sum(p.wall_time for p in parts),
    )
    fails = [p for p in parts if p.verdict == FAIL and p.witness is not None]
    if fails:
        rep.witness = {"first_failing_part": fails[0].name, **fails[0].witness}
    return rep
