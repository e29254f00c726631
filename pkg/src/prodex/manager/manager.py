"""Environment manager: lifecycle state machine, guarded environments,
plugin loading in strict order, the periodic tick loop, and the watchdog.

Every kernel mutation passes through the owning environment's guard,
which stamps a strictly increasing, gap-free sequence number into an
audit log; that log is how guard serialization is verified.
"""

from __future__ import annotations

import enum
import threading
from contextlib import contextmanager
from typing import Callable, Iterator, Optional

from prodex.bus.bus import MessageBus
from prodex.bus.schema import SchemaRegistry, builtin_registry
from prodex.clock import Clock, ScheduledEvent, VirtualClock
from prodex.engine.kernel import Kernel
from prodex.manager.config import ManagerConfig
from prodex.manager.logrouter import LogRouter
from prodex.manager.plugins import PLUGIN_KINDS, Plugin, PluginServices


class ManagerError(Exception):
    pass


class LifecycleState(enum.Enum):
    UNCONFIGURED = "unconfigured"
    INACTIVE = "inactive"
    ACTIVE = "active"
    FINALIZED = "finalized"


class EnvGuard:
    """Exclusive access token for one environment. Re-entrant; each
    acquisition stamps the next sequence number into the audit log."""

    def __init__(self):
        self._lock = threading.RLock()
        self.seq = 0
        self.audit: list[tuple[int, str]] = []

    @contextmanager
    def mutate(self, tag: str) -> Iterator[int]:
        with self._lock:
            self.seq += 1
            seq = self.seq
            self.audit.append((seq, tag))
            yield seq


class Environment:
    def __init__(self, name: str, kernel: Kernel, guard: EnvGuard):
        self.name = name
        self.kernel = kernel
        self.guard = guard
        self.loaded: list[str] = []  # plugin names in load order
        self.functions: dict[str, tuple[str, Callable]] = {}  # name -> (plugin, fn)
        # shared facilities plugins hang on the environment for each other,
        # e.g. the planning registry the executive needs to reach
        self.extensions: dict[str, object] = {}

    def mutate(self, tag: str):
        return self.guard.mutate(tag)

    def register_function(self, plugin: str, name: str, fn: Callable) -> None:
        if name in self.functions:
            owner = self.functions[name][0]
            raise ManagerError(
                f"function '{name}' already registered in '{self.name}' by plugin '{owner}'"
            )
        self.kernel.register_function(name, fn)
        self.functions[name] = (plugin, fn)

    def unregister_plugin_functions(self, plugin: str) -> None:
        for name in [n for n, (p, _) in self.functions.items() if p == plugin]:
            self.kernel.unregister_function(name)
            del self.functions[name]


class Manager:
    def __init__(
        self,
        config: ManagerConfig,
        clock: Optional[Clock] = None,
        registry: Optional[SchemaRegistry] = None,
        bus: Optional[MessageBus] = None,
        console: Optional[Callable[[str], None]] = None,
        color: bool = False,
    ):
        self.config = config
        self.clock = clock if clock is not None else VirtualClock()
        self.registry = registry if registry is not None else builtin_registry()
        self.bus = bus if bus is not None else MessageBus(self.clock, self.registry)
        self.router = LogRouter(self.clock, console=console, color=color)
        self.state = LifecycleState.UNCONFIGURED
        self.environments: dict[str, Environment] = {}
        self.plugins: dict[str, Plugin] = {}
        # (event, plugin, env-or-None) in call order; lifecycle pairing is
        # checked against this trace
        self.lifecycle_log: list[tuple[str, str, Optional[str]]] = []
        self._tick_events: dict[str, ScheduledEvent] = {}
        self._heartbeat_topics: dict[str, str] = {}
        self._watchdog: Optional[dict] = None

    # ------------------------------------------------------------- lifecycle

    def _require(self, *states: LifecycleState) -> None:
        if self.state not in states:
            allowed = "/".join(s.value for s in states)
            raise ManagerError(f"operation requires state {allowed}, manager is {self.state.value}")

    def configure(self) -> "Manager":
        self._require(LifecycleState.UNCONFIGURED)
        for pc in self.config.plugins.values():
            if pc.kind not in PLUGIN_KINDS:
                raise ManagerError(f"unknown plugin kind '{pc.kind}' for plugin '{pc.name}'")
        services = PluginServices(
            bus=self.bus,
            registry=self.registry,
            clock=self.clock,
            resolve=self.config.resolve,
            log=self.router.route,
        )
        for name, env_cfg in self.config.environments.items():
            if name in self.environments:
                raise ManagerError(f"duplicate environment name '{name}'")
            kernel = Kernel(name)
            env = Environment(name, kernel, EnvGuard())
            kernel.log_sink = lambda level, text, _n=name: self.router.route(_n, level, text)
            kernel.console_sink = lambda router, text, _n=name: self.router.route(_n, "info", text)
            if env_cfg.log_file:
                self.router.attach_file(name, self.config.resolve(env_cfg.log_file))
            self.environments[name] = env
        for name, pc in self.config.plugins.items():
            plugin = PLUGIN_KINDS[pc.kind](name, pc.settings, services)
            plugin.initialize()
            plugin.state = "initialized"
            self.lifecycle_log.append(("initialize", name, None))
            self.plugins[name] = plugin
        self.state = LifecycleState.INACTIVE
        return self

    def activate(self) -> None:
        self._require(LifecycleState.INACTIVE)
        loaded_now: list[tuple[Environment, Plugin]] = []
        try:
            for env in self.environments.values():
                for plugin_name in self.config.environments[env.name].plugins:
                    if plugin_name in env.loaded:
                        continue
                    plugin = self.plugins[plugin_name]
                    self._load_into(env, plugin)
                    loaded_now.append((env, plugin))
            for env in self.environments.values():
                with env.mutate("activate-reset"):
                    env.kernel.reset()
                    env.kernel.run()
        except Exception as exc:
            for env, plugin in reversed(loaded_now):
                try:
                    self._unload_from(env, plugin)
                except Exception:
                    self.router.route(env.name, "error", f"rollback unload of '{plugin.name}' failed")
            raise ManagerError(f"activation failed: {exc}") from exc
        self.state = LifecycleState.ACTIVE
        for env in self.environments.values():
            self._maybe_start_ticking(env)
        if self.config.watchdog is not None:
            self.arm_watchdog(self.config.watchdog.topic, self.config.watchdog.timeout_s)

    def deactivate(self) -> None:
        self._require(LifecycleState.ACTIVE)
        self._disarm_watchdog()
        for name, event in self._tick_events.items():
            event.cancel()
        self._tick_events.clear()
        for env in self.environments.values():
            for plugin_name in reversed(list(env.loaded)):
                self._unload_from(env, self.plugins[plugin_name])
        self.state = LifecycleState.INACTIVE

    def cleanup(self) -> None:
        self._require(LifecycleState.INACTIVE)
        for env in self.environments.values():
            for plugin_name in reversed(list(env.loaded)):
                self._unload_from(env, self.plugins[plugin_name])
            self.bus.release_owner(env.name)
            self.router.detach_file(env.name)
        self.environments.clear()
        self.state = LifecycleState.UNCONFIGURED

    def shutdown(self) -> None:
        if self.state is LifecycleState.FINALIZED:
            raise ManagerError("manager already finalized")
        if self.state is LifecycleState.ACTIVE:
            self.deactivate()
        if self.state is LifecycleState.INACTIVE:
            self.cleanup()
        for plugin in self.plugins.values():
            if plugin.state == "initialized":
                plugin.finalize()
                plugin.state = "finalized"
                self.lifecycle_log.append(("finalize", plugin.name, None))
        self.state = LifecycleState.FINALIZED
        self.clock.close()

    # --------------------------------------------------------- plugin loading

    def _load_into(self, env: Environment, plugin: Plugin) -> None:
        try:
            with env.mutate(f"load {plugin.name}"):
                plugin.env_init(env)
        except Exception:
            env.unregister_plugin_functions(plugin.name)
            raise
        env.loaded.append(plugin.name)
        plugin.loaded_into.add(env.name)
        self.lifecycle_log.append(("env_init", plugin.name, env.name))

    def _unload_from(self, env: Environment, plugin: Plugin) -> None:
        with env.mutate(f"unload {plugin.name}"):
            plugin.env_destroyed(env)
        env.unregister_plugin_functions(plugin.name)
        env.loaded.remove(plugin.name)
        plugin.loaded_into.discard(env.name)
        self.lifecycle_log.append(("env_destroyed", plugin.name, env.name))

    def load_plugin(self, env_name: str, plugin_name: str) -> None:
        self._require(LifecycleState.ACTIVE, LifecycleState.INACTIVE)
        env = self._env(env_name)
        plugin = self.plugins.get(plugin_name)
        if plugin is None:
            raise ManagerError(f"plugin '{plugin_name}' is not defined")
        if plugin_name in env.loaded:
            raise ManagerError(f"plugin '{plugin_name}' already loaded in '{env_name}'")
        self._load_into(env, plugin)
        if self.state is LifecycleState.ACTIVE:
            self._maybe_start_ticking(env)

    def unload_plugin(self, env_name: str, plugin_name: str) -> None:
        self._require(LifecycleState.ACTIVE, LifecycleState.INACTIVE)
        env = self._env(env_name)
        if plugin_name not in env.loaded:
            raise ManagerError(f"plugin '{plugin_name}' is not loaded in '{env_name}'")
        self._unload_from(env, self.plugins[plugin_name])
        if self.state is LifecycleState.ACTIVE and not self._executive_of(env):
            event = self._tick_events.pop(env.name, None)
            if event is not None:
                event.cancel()

    def _env(self, name: str) -> Environment:
        env = self.environments.get(name)
        if env is None:
            raise ManagerError(f"no environment '{name}'")
        return env

    # ---------------------------------------------------------------- ticking

    def _executive_of(self, env: Environment) -> Optional[Plugin]:
        for plugin_name in env.loaded:
            plugin = self.plugins[plugin_name]
            if plugin.kind == "executive":
                return plugin
        return None

    def _maybe_start_ticking(self, env: Environment) -> None:
        if env.name in self._tick_events:
            return
        executive = self._executive_of(env)
        if executive is None:
            return
        period = 1.0 / self.config.environments[env.name].run_frequency_hz
        if getattr(executive, "publish_heartbeat", False):
            topic = f"{env.name}/ran"
            self.bus.create_publisher(env.name, topic, "Empty")
            self._heartbeat_topics[env.name] = topic
        self._tick_events[env.name] = self.clock.call_at(
            self.clock.now() + period, self._tick, env, period
        )

    def _tick(self, env: Environment, period: float) -> None:
        if self.state is not LifecycleState.ACTIVE or env.name not in self._tick_events:
            return
        start = self.clock.now()
        with env.mutate("tick"):
            kernel = env.kernel
            if "time" in kernel.templates:
                stale = [f.id for f in kernel.facts.values() if f.template == "time" and not f.ordered]
                for fact_id in stale:
                    kernel.retract_fact(fact_id)
                kernel.assert_fact("time", {"now": start})
            kernel.run()
        topic = self._heartbeat_topics.get(env.name)
        if topic is not None:
            self.bus.publish(topic, {})
        end = self.clock.now()
        next_at = start + period
        if end > next_at:
            self.router.route(env.name, "warn", f"tick overran its {period:.3f}s period")
            next_at = end
        self._tick_events[env.name] = self.clock.call_at(next_at, self._tick, env, period)

    def tick_once(self, env_name: str) -> int:
        """One manual inference cycle (time fact + run), outside the loop."""
        env = self._env(env_name)
        with env.mutate("manual-tick"):
            kernel = env.kernel
            if "time" in kernel.templates:
                stale = [f.id for f in kernel.facts.values() if f.template == "time" and not f.ordered]
                for fact_id in stale:
                    kernel.retract_fact(fact_id)
                kernel.assert_fact("time", {"now": self.clock.now()})
            return kernel.run()

    # --------------------------------------------------------------- watchdog

    def arm_watchdog(self, topic: str, timeout_s: float) -> None:
        self._require(LifecycleState.ACTIVE)
        state = {"last": self.clock.now(), "timeout": timeout_s, "armed": True}
        self._watchdog = state

        def on_heartbeat(_topic: str, handle) -> None:
            state["last"] = self.clock.now()
            self.bus.msg_destroy(handle)

        self.bus.create_subscription("_manager", topic, "Empty", on_heartbeat)
        self.clock.call_at(self.clock.now() + timeout_s, self._watchdog_check, state)

    def _disarm_watchdog(self) -> None:
        if self._watchdog is not None:
            self._watchdog["armed"] = False
            self._watchdog = None
            self.bus.release_owner("_manager")

    def _watchdog_check(self, state: dict) -> None:
        if not state["armed"] or self.state is not LifecycleState.ACTIVE:
            return
        expiry = state["last"] + state["timeout"]
        now = self.clock.now()
        if now >= expiry:
            self.router.route(
                "_manager", "error", "peer heartbeat lost; deactivating for recovery"
            )
            self.deactivate()
            return
        self.clock.call_at(expiry, self._watchdog_check, state)
