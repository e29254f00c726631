"""Safe-area monitoring scenario.

A simulated turtle publishes its pose at a fixed rate while a scripted
velocity command drives it over the safe-area boundary. The monitor
environment's rules flag the departure, call the teleport service until a
call is acknowledged, and the turtle ends up back at the configured
center. Dropping the first teleport round trip exercises the retry path:
exactly two requests go out.
"""

from __future__ import annotations

import os
from typing import Optional, Tuple

import yaml

from prodex.clock import VirtualClock
from prodex.manager.config import config_from_dict
from prodex.manager.manager import Manager
from prodex.scenarios.report import ScenarioReport

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
CONFIG = os.path.join(FIXTURES, "turtle", "config.yaml")

CANVAS = 11.09


class TurtleSim:
    """Kinematic point turtle: integrates a velocity command between pose
    publications and serves absolute teleports. A positive `drop_requests`
    makes the service lose that many incoming calls (nothing applied, no
    response; the caller's timeout answers instead)."""

    def __init__(
        self,
        bus,
        clock,
        rate_hz: float = 10.0,
        start: Tuple[float, float] = (5.5, 5.5),
        topic: str = "turtle1/pose",
        service: str = "turtle1/teleport_absolute",
        owner: str = "turtlesim",
        drop_requests: int = 0,
    ):
        self.bus = bus
        self.clock = clock
        self.period = 1.0 / rate_hz
        self.topic = topic
        self.service = service
        self.owner = owner
        self.x, self.y, self.theta = start[0], start[1], 0.0
        self.vx = 0.0
        self.vy = 0.0
        self.x_limit: Optional[float] = None
        self.drop_requests = drop_requests
        self.requests: list[tuple[float, dict]] = []
        self.dropped = 0
        self.poses: list[tuple[float, float, float]] = []
        self._event = None

    def start(self) -> None:
        self.bus.create_publisher(self.owner, self.topic, "Pose")
        self.bus.create_service(
            self.owner, self.service, "TeleportRequest", "Empty", self._teleport
        )
        self._event = self.clock.call_after(self.period, self._publish)

    def stop(self) -> None:
        if self._event is not None:
            self._event.cancel()
            self._event = None

    def drive(self, vx: float, vy: float = 0.0, x_limit: Optional[float] = None) -> None:
        self.vx, self.vy, self.x_limit = vx, vy, x_limit

    def _publish(self) -> None:
        self.x += self.vx * self.period
        self.y += self.vy * self.period
        if self.x_limit is not None and self.x >= self.x_limit:
            self.x = self.x_limit
            self.vx = self.vy = 0.0
        self.x = min(max(self.x, 0.0), CANVAS)
        self.y = min(max(self.y, 0.0), CANVAS)
        self.poses.append((self.clock.now(), self.x, self.y))
        self.bus.publish(
            self.topic, {"x": self.x, "y": self.y, "theta": self.theta}
        )
        self._event = self.clock.call_after(self.period, self._publish)

    def _teleport(self, request: dict) -> Optional[dict]:
        self.requests.append((self.clock.now(), dict(request)))
        if self.drop_requests > 0:
            self.drop_requests -= 1
            self.dropped += 1
            return None
        self.x, self.y = request["x"], request["y"]
        self.theta = request["theta"]
        self.vx = self.vy = 0.0
        self.x_limit = None
        return {}


def _facts(kernel, template: str) -> list:
    return [
        f
        for f in kernel.facts.values()
        if not f.ordered and f.template == template
    ]


def run_turtle(
    config_path: str = CONFIG, report: Optional[ScenarioReport] = None, **overrides
) -> ScenarioReport:
    with open(config_path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    base_dir = os.path.dirname(os.path.abspath(config_path))
    scenario = dict(data.get("scenario") or {})
    scenario.update(overrides)
    cfg = config_from_dict(data, base_dir=base_dir)

    params_file = cfg.resolve(cfg.plugins["conf"].settings["config_file"])
    with open(params_file, "r", encoding="utf-8") as fh:
        params = yaml.safe_load(fh)
    safe = params["safe"]
    center = (params["center"]["x"], params["center"]["y"])

    rate = float(scenario.get("pose_rate_hz", 10.0))
    drive = scenario.get("drive", {})
    drop = bool(scenario.get("drop_first_response", False))
    duration = float(scenario.get("duration_s", 2.0))
    env_name = next(iter(cfg.environments))
    tick_period = 1.0 / cfg.environments[env_name].run_frequency_hz

    if report is None:
        report = ScenarioReport("turtle")
    clock = VirtualClock()
    manager = Manager(cfg, clock=clock)
    manager.configure()
    manager.activate()
    sim = TurtleSim(
        manager.bus,
        clock,
        rate_hz=rate,
        start=center,
        drop_requests=1 if drop else 0,
    )
    sim.start()
    sim.drive(
        float(drive.get("vx", 6.0)),
        float(drive.get("vy", 0.0)),
        float(drive.get("x_limit", 10.7)),
    )
    report.record(0.0, "drive", vx=sim.vx, x_limit=sim.x_limit, drop=drop)

    clock.run_until(duration)

    kernel = manager.environments[env_name].kernel
    out_pose = next(
        (
            (t, x, y)
            for t, x, y in sim.poses
            if not (
                safe["xmin"] <= x <= safe["xmax"]
                and safe["ymin"] <= y <= safe["ymax"]
            )
        ),
        None,
    )
    detections = _facts(kernel, "turtle-detection")
    detected_at = min(f.values["at"] for f in detections) if detections else None
    counts = _facts(kernel, "turtle-teleport-count")
    n_requests = counts[0].values["n"] if counts else 0
    poses = _facts(kernel, "turtle-pose")
    tracked = (
        (poses[0].values["x"], poses[0].values["y"]) if poses else (None, None)
    )

    if out_pose is not None:
        report.record(out_pose[0], "left-safe-area", x=out_pose[1], y=out_pose[2])
    if detected_at is not None:
        report.record(detected_at, "out-of-bounds-detected")
        if out_pose is not None:
            report.record(
                detected_at, "detection-latency", latency=detected_at - out_pose[0]
            )
    for t, request in sim.requests:
        report.record(t, "teleport-request", x=request["x"], y=request["y"])
    report.record(clock.now(), "final-pose", x=sim.x, y=sim.y)

    report.check("left-safe-area", out_pose is not None)
    report.check("detected", detected_at is not None)
    report.check(
        "detected-within-one-cycle",
        out_pose is not None
        and detected_at is not None
        and 0.0 <= detected_at - out_pose[0] <= tick_period + 1e-9,
        tick_period=tick_period,
    )
    expected = 2 if drop else 1
    report.check(
        "requests-sent", n_requests == expected == len(sim.requests),
        expected=expected, sent=len(sim.requests),
    )
    report.check(
        "returned-to-center",
        abs(sim.x - center[0]) < 1e-9 and abs(sim.y - center[1]) < 1e-9,
    )
    report.check(
        "monitor-sees-center",
        tracked[0] is not None
        and abs(tracked[0] - center[0]) < 1e-9
        and abs(tracked[1] - center[1]) < 1e-9,
    )
    report.check("within-deadline", clock.now() <= duration + 1e-9)

    sim.stop()
    manager.shutdown()
    return report
