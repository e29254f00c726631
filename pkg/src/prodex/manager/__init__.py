"""Environment manager: lifecycle, plugin loading, ticking, log routing."""

from prodex.manager.config import (
    ConfigError,
    EnvironmentConfig,
    ManagerConfig,
    PluginConfig,
    WatchdogConfig,
    config_from_dict,
    load_config,
)
from prodex.manager.logrouter import LogRouter
from prodex.manager.manager import Environment, LifecycleState, Manager, ManagerError
from prodex.manager.plugins import Plugin, PluginServices, register_plugin_kind

# importing these modules registers their plugin kinds
import prodex.pddl.plugin  # noqa: E402,F401
import prodex.executive.plugin  # noqa: E402,F401

__all__ = [
    "ConfigError",
    "Environment",
    "EnvironmentConfig",
    "LifecycleState",
    "LogRouter",
    "Manager",
    "ManagerConfig",
    "ManagerError",
    "Plugin",
    "PluginConfig",
    "PluginServices",
    "WatchdogConfig",
    "config_from_dict",
    "load_config",
    "register_plugin_kind",
]
