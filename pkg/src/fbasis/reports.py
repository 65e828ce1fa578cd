"""Residual reports and their JSON/CSV export."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ResidualReport:
    """Outcome of checking one relation instance.

    ``relative`` is ``absolute`` divided by the largest individual term
    magnitude in the relation (0 when every term vanishes).  Advisory
    reports are recorded but never decide the overall outcome.
    """

    relation: str
    indices: tuple[int, ...] = ()
    arguments: tuple[str, ...] = ()
    absolute: float = 0.0
    relative: float = 0.0
    tolerance: float = DEFAULT_TOL
    passed: bool = True
    note: str = ""
    value: complex | None = field(default=None, compare=False)
    advisory: bool = False

    @classmethod
    def from_terms(
        cls,
        relation: str,
        terms: Sequence[complex],
        tol: float = DEFAULT_TOL,
        indices: Sequence[int] = (),
        arguments: Sequence[str] = (),
        note: str = "",
    ) -> "ResidualReport":
        """Report for ``sum(terms) == 0`` with term-based relative scaling."""
        total = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
        scale = max((abs(t) for t in terms), default=0.0)
        return cls.from_values(relation, abs(total), scale, tol, indices, arguments, note)

    @classmethod
    def from_values(
        cls,
        relation: str,
        absolute: float,
        scale: float,
        tol: float = DEFAULT_TOL,
        indices: Sequence[int] = (),
        arguments: Sequence[str] = (),
        note: str = "",
        value: complex | None = None,
    ) -> "ResidualReport":
        absolute = float(absolute)
        rel = 0.0 if scale == 0.0 else absolute / float(scale)
        ok = bool(math.isfinite(rel) and rel <= tol)
        return cls(relation, tuple(int(i) for i in indices), tuple(arguments), absolute, rel, tol, ok, note, value)

    @classmethod
    def failure(cls, relation: str, message: str, arguments: Sequence[str] = ()) -> "ResidualReport":
        """Report standing in for a check that raised instead of producing a residual."""
        return cls(relation, (), tuple(arguments), math.inf, math.inf, 0.0, False, message)

    def as_row(self) -> dict:
        row = {
            "relation": self.relation,
            "indices": list(self.indices),
            "arguments": list(self.arguments),
            "absolute": _num(self.absolute),
            "relative": _num(self.relative),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }
        if self.note:
            row["note"] = self.note
        if self.advisory:
            row["advisory"] = True
        return row

    def as_advisory(self) -> "ResidualReport":
        return replace(self, advisory=True)


def _num(x: float):
    return x if math.isfinite(x) else str(x)


def summarize(reports: Iterable[ResidualReport]) -> dict:
    reports = list(reports)
    failed = [r for r in reports if not r.passed and not r.advisory]
    worst = max((r.relative for r in reports if math.isfinite(r.relative)), default=0.0)
    return {
        "count": len(reports),
        "failed": len(failed),
        "advisory_failed": sum(1 for r in reports if r.advisory and not r.passed),
        "worst_relative": worst,
        "failing_relations": sorted({r.relation for r in failed}),
    }


def all_passed(reports: Iterable[ResidualReport]) -> bool:
    """Whether every non-advisory report passed."""
    return all(r.passed or r.advisory for r in reports)


def to_json(reports: Iterable[ResidualReport], **meta) -> str:
    reports = list(reports)
    doc = {"schema": 1, **meta, "summary": summarize(reports), "reports": [r.as_row() for r in reports]}
    return json.dumps(doc, sort_keys=True, indent=1)


CSV_FIELDS = ["relation", "indices", "arguments", "absolute", "relative", "tolerance", "passed", "advisory", "note"]


def to_csv(reports: Iterable[ResidualReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        row = r.as_row()
        row["indices"] = " ".join(map(str, r.indices))
        row["arguments"] = " ".join(r.arguments)
        row.setdefault("note", "")
        row["advisory"] = r.advisory
        w.writerow(row)
    return buf.getvalue()
