"""Time sources and deterministic event dispatch."""

import pytest

from prodex.clock import VirtualClock, WallClock


class TestVirtualClock:
    def test_time_only_moves_via_run_until(self):
        clock = VirtualClock()
        assert clock.now() == 0.0
        clock.run_until(5.0)
        assert clock.now() == 5.0

    def test_events_fire_in_time_order(self):
        clock = VirtualClock()
        seen = []
        clock.call_at(2.0, seen.append, "b")
        clock.call_at(1.0, seen.append, "a")
        clock.call_at(3.0, seen.append, "c")
        clock.run_until(2.5)
        assert seen == ["a", "b"]
        clock.run_until(10.0)
        assert seen == ["a", "b", "c"]

    def test_ties_fire_in_scheduling_order(self):
        clock = VirtualClock()
        seen = []
        for tag in "xyz":
            clock.call_at(1.0, seen.append, tag)
        clock.run_until(1.0)
        assert seen == ["x", "y", "z"]

    def test_callback_observes_event_time(self):
        clock = VirtualClock()
        at = []
        clock.call_at(4.0, lambda: at.append(clock.now()))
        clock.run_until(9.0)
        assert at == [4.0]
        assert clock.now() == 9.0

    def test_past_events_clamp_to_now(self):
        clock = VirtualClock(start=10.0)
        seen = []
        clock.call_at(3.0, seen.append, "late")
        clock.run_until(10.0)
        assert seen == ["late"]
        assert clock.now() == 10.0

    def test_call_after_is_relative(self):
        clock = VirtualClock()
        clock.run_until(2.0)
        at = []
        clock.call_after(1.5, lambda: at.append(clock.now()))
        clock.run_until(4.0)
        assert at == [3.5]

    def test_cancel(self):
        clock = VirtualClock()
        seen = []
        event = clock.call_at(1.0, seen.append, "nope")
        event.cancel()
        clock.run_until(2.0)
        assert seen == []
        assert clock.pending == 0

    def test_events_may_schedule_events(self):
        clock = VirtualClock()
        seen = []

        def chain(n):
            seen.append((clock.now(), n))
            if n > 0:
                clock.call_after(1.0, chain, n - 1)

        clock.call_at(1.0, chain, 2)
        clock.run_until(5.0)
        assert seen == [(1.0, 2), (2.0, 1), (3.0, 0)]

    def test_run_all_budget(self):
        clock = VirtualClock()

        def forever():
            clock.call_after(1.0, forever)

        clock.call_after(1.0, forever)
        with pytest.raises(RuntimeError, match="budget"):
            clock.run_all(limit=100)

    def test_identical_schedules_identical_timelines(self):
        def timeline():
            clock = VirtualClock()
            log = []
            clock.call_after(0.25, lambda: log.append(clock.now()))
            clock.call_after(0.25, lambda: clock.call_after(0.5, lambda: log.append(clock.now())))
            clock.run_until(10.0)
            return log

        assert timeline() == timeline()


class TestWallClock:
    def test_dispatches_and_closes(self):
        clock = WallClock()
        try:
            import threading

            done = threading.Event()
            clock.call_after(0.01, done.set)
            assert done.wait(timeout=2.0)
            assert clock.now() > 0.0
        finally:
            clock.close()

    def test_callback_errors_do_not_kill_dispatcher(self):
        clock = WallClock()
        try:
            import threading

            done = threading.Event()
            clock.call_after(0.0, lambda: 1 / 0)
            clock.call_after(0.01, done.set)
            assert done.wait(timeout=2.0)
        finally:
            clock.close()
