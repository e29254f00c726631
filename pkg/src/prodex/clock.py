"""Simulated and wall-clock time sources with event scheduling.

VirtualClock is a discrete-event scheduler: time only moves when run_until
consumes scheduled events, so two runs with the same seed produce identical
timelines. WallClock backs the same interface with a dispatcher thread for
soak testing against real time.
"""

from __future__ import annotations

import heapq
import itertools
import threading
import time as _time
from typing import Any, Callable, Optional


class ScheduledEvent:
    """Handle returned by call_at/call_after; cancellation is lazy."""

    __slots__ = ("when", "fn", "args", "cancelled")

    def __init__(self, when: float, fn: Callable[..., Any], args: tuple):
        self.when = when
        self.fn = fn
        self.args = args
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class Clock:
    """Common interface; see VirtualClock and WallClock."""

    def now(self) -> float:
        raise NotImplementedError

    def call_at(self, when: float, fn: Callable[..., Any], *args: Any) -> ScheduledEvent:
        raise NotImplementedError

    def call_after(self, delay: float, fn: Callable[..., Any], *args: Any) -> ScheduledEvent:
        return self.call_at(self.now() + delay, fn, *args)

    def run_until(self, deadline: float) -> None:
        raise NotImplementedError

    def close(self) -> None:
        pass


class VirtualClock(Clock):
    def __init__(self, start: float = 0.0):
        self._now = start
        self._heap: list[tuple[float, int, ScheduledEvent]] = []
        self._seq = itertools.count()

    def now(self) -> float:
        return self._now

    def call_at(self, when: float, fn: Callable[..., Any], *args: Any) -> ScheduledEvent:
        # events in the past fire at the current instant, never rewind time
        event = ScheduledEvent(max(when, self._now), fn, args)
        heapq.heappush(self._heap, (event.when, next(self._seq), event))
        return event

    def run_until(self, deadline: float) -> None:
        """Consume events up to and including `deadline` in (time, order
        scheduled) order, then land exactly on the deadline."""
        while self._heap and self._heap[0][0] <= deadline:
            when, _, event = heapq.heappop(self._heap)
            if event.cancelled:
                continue
            self._now = when
            event.fn(*event.args)
        if deadline > self._now:
            self._now = deadline

    def run_all(self, limit: int = 1_000_000) -> None:
        """Drain every pending event; guards against runaway self-scheduling."""
        steps = 0
        while self._heap:
            when, _, event = heapq.heappop(self._heap)
            if event.cancelled:
                continue
            self._now = when
            event.fn(*event.args)
            steps += 1
            if steps >= limit:
                raise RuntimeError("virtual clock event budget exhausted")

    @property
    def pending(self) -> int:
        return sum(1 for _, _, e in self._heap if not e.cancelled)


class WallClock(Clock):
    def __init__(self):
        self._epoch = _time.monotonic()
        self._heap: list[tuple[float, int, ScheduledEvent]] = []
        self._seq = itertools.count()
        self._cond = threading.Condition()
        self._running = True
        self._thread = threading.Thread(target=self._loop, daemon=True, name="wall-clock")
        self._thread.start()

    def now(self) -> float:
        return _time.monotonic() - self._epoch

    def call_at(self, when: float, fn: Callable[..., Any], *args: Any) -> ScheduledEvent:
        event = ScheduledEvent(when, fn, args)
        with self._cond:
            heapq.heappush(self._heap, (event.when, next(self._seq), event))
            self._cond.notify()
        return event

    def _loop(self) -> None:
        while True:
            due: Optional[ScheduledEvent] = None
            with self._cond:
                while self._running:
                    if not self._heap:
                        self._cond.wait()
                        continue
                    delay = self._heap[0][0] - self.now()
                    if delay <= 0:
                        due = heapq.heappop(self._heap)[2]
                        break
                    self._cond.wait(timeout=delay)
                if not self._running:
                    return
            if due is not None and not due.cancelled:
                try:
                    due.fn(*due.args)
                except Exception:
                    # scheduler thread must survive callback errors
                    pass

    def run_until(self, deadline: float) -> None:
        remaining = deadline - self.now()
        if remaining > 0:
            _time.sleep(remaining)

    def close(self) -> None:
        with self._cond:
            self._running = False
            self._cond.notify()
        self._thread.join(timeout=2.0)
