"""Plugin base class, kind registry, and the core plugin kinds.

A plugin instance is constructed and initialize()d once by the manager,
may be loaded into any number of environments (env_init/env_destroyed per
environment, called under that environment's guard), and is finalize()d
exactly once at shutdown.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable, Optional

import yaml

from prodex.bus.bus import BusError, MessageBus
from prodex.bus.schema import SchemaRegistry
from prodex.clock import Clock
from prodex.engine.loader import load_file, load_text
from prodex.values import FALSE, TRUE, Handle, Symbol, Value

if TYPE_CHECKING:
    from prodex.manager.manager import Environment


class PluginError(Exception):
    pass


@dataclass
class PluginServices:
    bus: MessageBus
    registry: SchemaRegistry
    clock: Clock
    resolve: Callable[[str], str]  # config-relative path resolution
    log: Callable[[str, str, str], None]  # (env, level, text)


class Plugin:
    kind = "base"

    def __init__(self, name: str, settings: dict[str, Any], services: PluginServices):
        self.name = name
        self.settings = settings
        self.services = services
        self.state = "constructed"
        self.loaded_into: set[str] = set()

    def initialize(self) -> None:
        pass

    def finalize(self) -> None:
        pass

    def env_init(self, env: "Environment") -> None:
        pass

    def env_destroyed(self, env: "Environment") -> None:
        pass


PLUGIN_KINDS: dict[str, type[Plugin]] = {}


def register_plugin_kind(kind: str, cls: type[Plugin]) -> None:
    PLUGIN_KINDS[kind] = cls


# --------------------------------------------------------------------- kinds


class FileLoadPlugin(Plugin):
    """Loads rule files into the environment on every env_init; reloads of
    identical files are no-ops thanks to idempotent definitions."""

    kind = "file_load"

    def env_init(self, env: "Environment") -> None:
        files = self.settings.get("files", [])
        if not isinstance(files, list):
            raise PluginError(f"plugin '{self.name}': files must be a list")
        for path in files:
            load_file(env.kernel, self.services.resolve(str(path)))


class ExecutivePlugin(Plugin):
    """Marks its environment for periodic inference; the manager runs the
    tick loop for every environment holding one of these."""

    kind = "executive"

    @property
    def publish_heartbeat(self) -> bool:
        return bool(self.settings.get("publish_heartbeat", False))


class TimePlugin(Plugin):
    """Defines the (time (now <float>)) template the tick loop maintains and
    exposes (now) to rules."""

    kind = "time"

    def env_init(self, env: "Environment") -> None:
        load_text(env.kernel, "(deftemplate time (slot now (type FLOAT)))")
        env.register_function(self.name, "now", lambda: float(self.services.clock.now()))

    def env_destroyed(self, env: "Environment") -> None:
        env.unregister_plugin_functions(self.name)


def _flatten_config(data: Any, prefix: str) -> list[tuple[str, Symbol, Value]]:
    """Depth-first leaves of a parsed YAML tree as (path, type, value)."""
    leaves: list[tuple[str, Symbol, Value]] = []

    def walk(node: Any, path: str) -> None:
        if isinstance(node, dict):
            for key, child in node.items():
                walk(child, f"{path}/{key}")
            return
        if isinstance(node, list):
            for i, child in enumerate(node):
                walk(child, f"{path}/{i}")
            return
        if isinstance(node, bool):
            leaves.append((path, Symbol("BOOL"), TRUE if node else FALSE))
        elif isinstance(node, int):
            leaves.append((path, Symbol("INT"), node))
        elif isinstance(node, float):
            leaves.append((path, Symbol("FLOAT"), node))
        elif isinstance(node, str):
            leaves.append((path, Symbol("STRING"), node))
        else:
            raise PluginError(f"config value at '{path}' has unsupported type")

    root = "/" + "/".join(p for p in prefix.split("/") if p) if prefix else ""
    walk(data, root)
    return leaves


CONFVAL_TEMPLATE = (
    "(deftemplate confval"
    " (slot path (type STRING))"
    " (slot type (type SYMBOL))"
    " (slot value))"
)


class ConfigPlugin(Plugin):
    """Turns a YAML file into confval facts, registered as deffacts so they
    survive reset; also exposes (config-load file prefix) to rules."""

    kind = "config"

    def _leaves(self, path: str, prefix: str) -> list[tuple[str, Symbol, Value]]:
        with open(path, "r", encoding="utf-8") as handle:
            try:
                data = yaml.safe_load(handle)
            except yaml.YAMLError as exc:
                raise PluginError(f"{path}: {exc}") from exc
        if data is None:
            return []
        return _flatten_config(data, prefix)

    def env_init(self, env: "Environment") -> None:
        load_text(env.kernel, CONFVAL_TEMPLATE)
        file_setting = self.settings.get("config_file")
        if file_setting:
            prefix = str(self.settings.get("prefix", ""))
            leaves = self._leaves(self.services.resolve(str(file_setting)), prefix)
            if leaves:
                from prodex.values import escape_string, format_value

                literals = "".join(
                    f'\n  (confval (path "{escape_string(p)}") (type {t}) (value {format_value(v)}))'
                    for p, t, v in leaves
                )
                load_text(env.kernel, f"(deffacts config-{self.name}{literals})")
        kernel = env.kernel

        def config_load(path: Value, prefix: Value = "") -> Value:
            leaves = self._leaves(self.services.resolve(str(path)), str(prefix))
            for leaf_path, kind, value in leaves:
                kernel.assert_fact(
                    "confval", {"path": leaf_path, "type": kind, "value": value}
                )
            return len(leaves)

        env.register_function(self.name, "config-load", config_load)

    def env_destroyed(self, env: "Environment") -> None:
        env.unregister_plugin_functions(self.name)


BUS_TEMPLATES = (
    "(deftemplate bus-message"
    " (slot topic (type STRING))"
    " (slot msg-ptr (type EXTERNAL-ADDRESS)))\n"
    "(deftemplate bus-response"
    " (slot service (type STRING))"
    " (slot call-id (type INTEGER))"
    " (slot msg-ptr (type EXTERNAL-ADDRESS))"
    " (slot success (type SYMBOL)))"
)


def _fact_scalar(value: Any) -> Value:
    if isinstance(value, bool):
        return TRUE if value else FALSE
    if isinstance(value, (dict, list)):
        raise BusError("field is not a scalar; use a dotted path")
    return value


class BusMsgsPlugin(Plugin):
    """Exposes the bus to rules: subscriptions surface publications as
    bus-message facts, service responses as bus-response facts."""

    kind = "bus_msgs"

    def env_init(self, env: "Environment") -> None:
        load_text(env.kernel, BUS_TEMPLATES)
        bus = self.services.bus
        kernel = env.kernel
        owner = env.name

        def deliver(topic: str, handle: Handle) -> None:
            with env.mutate(f"bus-message {topic}"):
                kernel.assert_fact("bus-message", {"topic": topic, "msg-ptr": handle})

        def respond(service: str, call_id: int, handle: Handle, success: bool) -> None:
            with env.mutate(f"bus-response {service}"):
                kernel.assert_fact(
                    "bus-response",
                    {
                        "service": service,
                        "call-id": call_id,
                        "msg-ptr": handle,
                        "success": success,
                    },
                )

        def need_handle(value: Any) -> Handle:
            if not isinstance(value, Handle):
                raise BusError(f"expected a message handle, got {value!r}")
            return value

        functions: dict[str, Callable[..., Value]] = {
            "bus-create-subscription": lambda topic, schema: (
                bus.create_subscription(owner, str(topic), str(schema), deliver),
                TRUE,
            )[1],
            "bus-create-publisher": lambda topic, schema: (
                bus.create_publisher(owner, str(topic), str(schema)),
                TRUE,
            )[1],
            "bus-publish": lambda topic, handle: (
                bus.publish(str(topic), need_handle(handle)),
                TRUE,
            )[1],
            "bus-create-client": lambda service, timeout=1.0: (
                bus.create_client(owner, str(service), respond, float(timeout)),
                TRUE,
            )[1],
            "bus-call-service": lambda service, handle: bus.call(
                owner, str(service), need_handle(handle)
            ),
            "msg-create": lambda schema: bus.msg_create(owner, str(schema)),
            "msg-get-field": lambda handle, fieldname: _fact_scalar(
                bus.msg_get(need_handle(handle), str(fieldname))
            ),
            "msg-set-field": lambda handle, fieldname, value: (
                bus.msg_set(need_handle(handle), str(fieldname), value),
                TRUE,
            )[1],
            "msg-destroy": lambda handle: (bus.msg_destroy(need_handle(handle)), TRUE)[1],
        }
        for fn_name, fn in functions.items():
            env.register_function(self.name, fn_name, fn)

    def env_destroyed(self, env: "Environment") -> None:
        env.unregister_plugin_functions(self.name)
        self.services.bus.release_owner(env.name)


register_plugin_kind("file_load", FileLoadPlugin)
register_plugin_kind("executive", ExecutivePlugin)
register_plugin_kind("time", TimePlugin)
register_plugin_kind("config", ConfigPlugin)
register_plugin_kind("bus_msgs", BusMsgsPlugin)
