"""Machine-readable verification reports with stable, canonical output."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

MAX_DETAILS = 20

PASS, FAIL, SKIP = "pass", "fail", "skip"


@dataclass
class Check:
    name: str
    status: str
    details: list = field(default_factory=list)
    count: int = 0
    note: str = ""

    def to_dict(self) -> dict:
        out = {"name": self.name, "status": self.status}
        if self.details:
            out["details"] = self.details
            out["count"] = self.count
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class Report:
    title: str
    checks: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, name: str, failures=(), note: str = "", skip: bool = False) -> Check:
        failures = list(failures)
        if skip:
            status = SKIP
        else:
            status = FAIL if failures else PASS
        chk = Check(name, status, failures[:MAX_DETAILS], len(failures), note)
        self.checks.append(chk)
        return chk

    def extend(self, other: "Report", prefix: str = "") -> None:
        for chk in other.checks:
            self.checks.append(Check(prefix + chk.name, chk.status, chk.details, chk.count, chk.note))

    @property
    def ok(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    def failed(self) -> list:
        return [c for c in self.checks if c.status == FAIL]

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "status": PASS if self.ok else FAIL,
            "meta": self.meta,
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"== {self.title}: {'PASS' if self.ok else 'FAIL'}"]
        for k in sorted(self.meta):
            lines.append(f"   {k}: {self.meta[k]}")
        for c in self.checks:
            line = f"[{c.status.upper():4}] {c.name}"
            if c.note:
                line += f"  ({c.note})"
            lines.append(line)
            for d in c.details[:5]:
                lines.append(f"         - {json.dumps(d, sort_keys=True)}")
            if c.count > 5:
                lines.append(f"         ... {c.count} failures in total")
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        return self.to_text()
