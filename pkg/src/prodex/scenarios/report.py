"""Scenario run reports.

A report is an append-only sequence of JSON lines: timeline events carry
a virtual-clock timestamp, checks carry a pass/fail verdict. Keys are
sorted when rendering so a fixed-seed run produces byte-identical text.
"""

from __future__ import annotations

import json
from typing import Any, List, Optional


class ScenarioReport:
    def __init__(self, name: str):
        self.name = name
        self._lines: List[dict] = [{"event": "scenario", "name": name}]

    def record(self, t: float, event: str, **data: Any) -> None:
        self._lines.append({"t": round(float(t), 6), "event": event, **data})

    def check(self, name: str, ok: bool, **data: Any) -> bool:
        self._lines.append(
            {"event": "check", "name": name, "ok": bool(ok), **data}
        )
        return bool(ok)

    @property
    def checks(self) -> List[dict]:
        return [l for l in self._lines if l.get("event") == "check"]

    @property
    def passed(self) -> bool:
        checks = self.checks
        return bool(checks) and all(c["ok"] for c in checks)

    def value(self, event: str, key: str) -> Optional[Any]:
        """First recorded value under `key` for a given event, if any."""
        for line in self._lines:
            if line.get("event") == event and key in line:
                return line[key]
        return None

    def to_text(self) -> str:
        return "".join(
            json.dumps(line, sort_keys=True) + "\n" for line in self._lines
        )

    def write(self, path: str) -> None:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(self.to_text())

    def __repr__(self) -> str:
        verdict = "passed" if self.passed else "failed"
        return f"<report {self.name}: {len(self._lines)} lines, {verdict}>"
