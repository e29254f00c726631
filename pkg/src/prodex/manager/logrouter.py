"""Log routing: console sink plus optional per-environment files.

File lines follow "<iso8601> [<level>] (<env>) <text>". Timestamps come
from the manager's clock, so virtual runs produce identical log files.
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Callable, Optional, TextIO

from prodex.clock import Clock

LEVELS = ("debug", "info", "warn", "error")

_COLORS = {
    "debug": "\x1b[2m",
    "info": "\x1b[32m",
    "warn": "\x1b[33m",
    "error": "\x1b[31m",
}
_RESET = "\x1b[0m"


def _iso(timestamp: float) -> str:
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).isoformat()


class LogRouter:
    def __init__(
        self,
        clock: Clock,
        console: Optional[Callable[[str], None]] = None,
        color: bool = False,
        min_level: str = "debug",
    ):
        self.clock = clock
        self.console = console
        self.color = color
        self.min_level = min_level
        self.records: list[tuple[float, str, str, str]] = []
        self._files: dict[str, TextIO] = {}  # env name -> open file

    def attach_file(self, env: str, path: str) -> None:
        self._files[env] = open(path, "a", encoding="utf-8")

    def detach_file(self, env: str) -> None:
        handle = self._files.pop(env, None)
        if handle is not None:
            handle.close()

    def close(self) -> None:
        for env in list(self._files):
            self.detach_file(env)

    def route(self, env: str, level: str, text: str) -> None:
        level = level.lower()
        if level not in LEVELS:
            level = "info"
        if LEVELS.index(level) < LEVELS.index(self.min_level):
            return
        now = self.clock.now()
        self.records.append((now, env, level, text))
        line = f"{_iso(now)} [{level}] ({env}) {text}"
        if self.console is not None:
            if self.color:
                self.console(f"{_COLORS[level]}{line}{_RESET}")
            else:
                self.console(line)
        handle = self._files.get(env)
        if handle is not None:
            try:
                handle.write(line + "\n")
                handle.flush()
            except OSError as exc:
                if self.console is not None:
                    self.console(f"{_iso(now)} [error] ({env}) log file sink failed: {exc}")
