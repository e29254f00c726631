"""Manager configuration: YAML file with top-level `environments` and
`plugins` mappings, plus an optional `watchdog` section.

    environments:
      main:
        plugins: [exec, files]
        run_frequency_hz: 10
        log_file: main.log        # optional
    plugins:
      exec:  {kind: executive, publish_heartbeat: true}
      files: {kind: file_load, files: [rules.clp]}
    watchdog:                     # optional
      topic: peer/ran
      timeout_s: 0.5

Relative paths in plugin settings resolve against the config file's
directory (`base_dir`).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml


class ConfigError(Exception):
    pass


@dataclass
class EnvironmentConfig:
    name: str
    plugins: list[str]
    run_frequency_hz: float = 10.0
    log_file: Optional[str] = None


@dataclass
class PluginConfig:
    name: str
    kind: str
    settings: dict[str, Any] = field(default_factory=dict)


@dataclass
class WatchdogConfig:
    topic: str
    timeout_s: float


@dataclass
class ManagerConfig:
    environments: dict[str, EnvironmentConfig]
    plugins: dict[str, PluginConfig]
    watchdog: Optional[WatchdogConfig] = None
    base_dir: str = "."

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)


def _require_mapping(value: Any, what: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{what} must be a mapping")
    return value


def config_from_dict(data: dict, base_dir: str = ".") -> ManagerConfig:
    data = _require_mapping(data, "config")
    env_section = _require_mapping(data.get("environments"), "environments")
    plugin_section = _require_mapping(data.get("plugins"), "plugins")

    plugins: dict[str, PluginConfig] = {}
    for name, body in plugin_section.items():
        body = _require_mapping(body, f"plugin '{name}'")
        kind = body.get("kind")
        if not isinstance(kind, str) or not kind:
            raise ConfigError(f"plugin '{name}' needs a 'kind'")
        settings = {k: v for k, v in body.items() if k != "kind"}
        plugins[str(name)] = PluginConfig(str(name), kind, settings)

    environments: dict[str, EnvironmentConfig] = {}
    for name, body in env_section.items():
        body = _require_mapping(body, f"environment '{name}'")
        plugin_names = body.get("plugins", [])
        if not isinstance(plugin_names, list) or not all(
            isinstance(p, str) for p in plugin_names
        ):
            raise ConfigError(f"environment '{name}': plugins must be a list of names")
        for p in plugin_names:
            if p not in plugins:
                raise ConfigError(f"environment '{name}' references undefined plugin '{p}'")
        freq = body.get("run_frequency_hz", 10.0)
        if isinstance(freq, bool) or not isinstance(freq, (int, float)) or freq <= 0:
            raise ConfigError(f"environment '{name}': run_frequency_hz must be > 0")
        log_file = body.get("log_file")
        if log_file is not None and not isinstance(log_file, str):
            raise ConfigError(f"environment '{name}': log_file must be a path")
        environments[str(name)] = EnvironmentConfig(
            str(name), list(plugin_names), float(freq), log_file
        )

    watchdog = None
    if "watchdog" in data and data["watchdog"] is not None:
        wd = _require_mapping(data["watchdog"], "watchdog")
        topic = wd.get("topic")
        timeout = wd.get("timeout_s")
        if not isinstance(topic, str) or not topic:
            raise ConfigError("watchdog needs a 'topic'")
        if isinstance(timeout, bool) or not isinstance(timeout, (int, float)) or timeout <= 0:
            raise ConfigError("watchdog needs timeout_s > 0")
        watchdog = WatchdogConfig(topic, float(timeout))

    return ManagerConfig(environments, plugins, watchdog, base_dir)


def load_config(path: str) -> ManagerConfig:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = yaml.safe_load(handle)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data or {}, base_dir=os.path.dirname(os.path.abspath(path)))
