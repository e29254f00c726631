"""Message schemas: named, ordered field lists with a small kind system.

Kinds: string, integer, float, boolean, nested(<schema>), array(<kind>).
Nesting must be acyclic. A registry file is YAML mapping schema names to
{field: kind} mappings, e.g. kind strings "float", "nested:Pose",
"array:integer".
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Any, Optional

import yaml

from prodex.values import FALSE, TRUE, Symbol


class SchemaError(Exception):
    pass


_BASES = ("string", "integer", "float", "boolean", "nested", "array")


@dataclass(frozen=True)
class FieldKind:
    base: str
    arg: Optional[str] = None  # schema name for nested, element base for array

    @classmethod
    def parse(cls, text: str) -> "FieldKind":
        text = text.strip()
        if ":" in text:
            base, arg = text.split(":", 1)
            base, arg = base.strip(), arg.strip()
        else:
            base, arg = text, None
        if base not in _BASES:
            raise SchemaError(f"unknown field kind '{text}'")
        if base in ("nested", "array") and not arg:
            raise SchemaError(f"kind '{base}' needs an argument, e.g. {base}:X")
        if base == "array" and arg not in ("string", "integer", "float", "boolean"):
            raise SchemaError(f"array element kind '{arg}' unsupported")
        if base not in ("nested", "array") and arg:
            raise SchemaError(f"kind '{base}' takes no argument")
        return cls(base, arg)

    def __str__(self) -> str:
        return self.base if self.arg is None else f"{self.base}:{self.arg}"


@dataclass(frozen=True)
class MessageSchema:
    name: str
    fields: tuple[tuple[str, FieldKind], ...]

    def field(self, name: str) -> Optional[FieldKind]:
        for fname, kind in self.fields:
            if fname == name:
                return kind
        return None


def _scalar_default(kind: FieldKind) -> Any:
    return {"string": "", "integer": 0, "float": 0.0, "boolean": False}[kind.base]


def _coerce_scalar(base: str, value: Any, where: str) -> Any:
    if isinstance(value, Symbol) and base == "boolean":
        if value == TRUE:
            return True
        if value == FALSE:
            return False
    if base == "boolean":
        if isinstance(value, bool):
            return value
        raise SchemaError(f"{where}: expected boolean, got {value!r}")
    if base == "integer":
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"{where}: expected integer, got {value!r}")
        return int(value)
    if base == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{where}: expected float, got {value!r}")
        return float(value)
    if isinstance(value, str):
        return str(value)
    raise SchemaError(f"{where}: expected string, got {value!r}")


class SchemaRegistry:
    def __init__(self):
        self._schemas: dict[str, MessageSchema] = {}

    def register(self, name: str, fields: list[tuple[str, str]]) -> MessageSchema:
        if name in self._schemas:
            raise SchemaError(f"schema '{name}' already registered")
        seen: set[str] = set()
        parsed: list[tuple[str, FieldKind]] = []
        for fname, kind_text in fields:
            if fname in seen:
                raise SchemaError(f"schema '{name}': duplicate field '{fname}'")
            seen.add(fname)
            parsed.append((fname, FieldKind.parse(kind_text)))
        schema = MessageSchema(name, tuple(parsed))
        self._schemas[name] = schema
        self._check_nesting(schema, [name])
        return schema

    def _check_nesting(self, schema: MessageSchema, trail: list[str]) -> None:
        for fname, kind in schema.fields:
            if kind.base != "nested":
                continue
            target = kind.arg
            if target in trail:
                del self._schemas[trail[0]]
                raise SchemaError(f"nesting cycle through schema '{target}'")
            inner = self._schemas.get(target or "")
            if inner is None:
                del self._schemas[trail[0]]
                raise SchemaError(f"schema '{schema.name}': nested schema '{target}' unknown")
            self._check_nesting(inner, trail + [target])  # type: ignore[list-item]

    def get(self, name: str) -> MessageSchema:
        schema = self._schemas.get(name)
        if schema is None:
            raise SchemaError(f"schema '{name}' not registered")
        return schema

    def names(self) -> list[str]:
        return sorted(self._schemas)

    def defaults(self, name: str) -> dict[str, Any]:
        schema = self.get(name)
        out: dict[str, Any] = {}
        for fname, kind in schema.fields:
            if kind.base == "nested":
                out[fname] = self.defaults(kind.arg or "")
            elif kind.base == "array":
                out[fname] = []
            else:
                out[fname] = _scalar_default(kind)
        return out

    def conform(self, name: str, values: dict[str, Any]) -> dict[str, Any]:
        """Full message values: missing fields take defaults, extras error."""
        schema = self.get(name)
        out = self.defaults(name)
        remaining = dict(values)
        for fname, kind in schema.fields:
            if fname not in remaining:
                continue
            value = remaining.pop(fname)
            where = f"{name}.{fname}"
            if kind.base == "nested":
                if not isinstance(value, dict):
                    raise SchemaError(f"{where}: expected nested message values")
                out[fname] = self.conform(kind.arg or "", value)
            elif kind.base == "array":
                if not isinstance(value, list):
                    raise SchemaError(f"{where}: expected a list")
                out[fname] = [_coerce_scalar(kind.arg or "", v, where) for v in value]
            else:
                out[fname] = _coerce_scalar(kind.base, value, where)
        if remaining:
            raise SchemaError(f"schema '{name}' has no field '{next(iter(remaining))}'")
        return out

    def get_path(self, name: str, values: dict[str, Any], path: str) -> Any:
        """Dotted-path read; numeric segments index arrays."""
        schema_name: Optional[str] = name
        current: Any = values
        kind: Optional[FieldKind] = None
        for segment in path.split("."):
            if isinstance(current, list):
                try:
                    current = current[int(segment)]
                except (ValueError, IndexError):
                    raise SchemaError(f"bad array index '{segment}' in '{path}'")
                kind = None
                continue
            if schema_name is None or not isinstance(current, dict):
                raise SchemaError(f"path '{path}' descends into a scalar")
            schema = self.get(schema_name)
            kind = schema.field(segment)
            if kind is None:
                raise SchemaError(f"schema '{schema_name}' has no field '{segment}'")
            current = current[segment]
            schema_name = kind.arg if kind.base == "nested" else None
        return current

    def set_path(self, name: str, values: dict[str, Any], path: str, value: Any) -> None:
        segments = path.split(".")
        schema_name: Optional[str] = name
        current: Any = values
        for segment in segments[:-1]:
            if isinstance(current, list):
                try:
                    current = current[int(segment)]
                except (ValueError, IndexError):
                    raise SchemaError(f"bad array index '{segment}' in '{path}'")
                schema_name = None
                continue
            schema = self.get(schema_name) if schema_name else None
            kind = schema.field(segment) if schema else None
            if schema and kind is None:
                raise SchemaError(f"schema '{schema_name}' has no field '{segment}'")
            current = current[segment]
            schema_name = kind.arg if kind and kind.base == "nested" else None
        last = segments[-1]
        if isinstance(current, list):
            try:
                idx = int(last)
            except ValueError:
                raise SchemaError(f"bad array index '{last}' in '{path}'")
            if not 0 <= idx < len(current):
                raise SchemaError(f"array index {idx} out of range in '{path}'")
            current[idx] = value
            return
        if schema_name is None or not isinstance(current, dict):
            raise SchemaError(f"path '{path}' descends into a scalar")
        schema = self.get(schema_name)
        kind = schema.field(last)
        if kind is None:
            raise SchemaError(f"schema '{schema_name}' has no field '{last}'")
        where = f"{schema_name}.{last}"
        if kind.base == "nested":
            if not isinstance(value, dict):
                raise SchemaError(f"{where}: expected nested message values")
            current[last] = self.conform(kind.arg or "", value)
        elif kind.base == "array":
            if not isinstance(value, list):
                raise SchemaError(f"{where}: expected a list")
            current[last] = [_coerce_scalar(kind.arg or "", v, where) for v in value]
        else:
            current[last] = _coerce_scalar(kind.base, value, where)

    def copy_values(self, values: dict[str, Any]) -> dict[str, Any]:
        return copy.deepcopy(values)

    def load_file(self, path: str) -> int:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle) or {}
        if not isinstance(data, dict):
            raise SchemaError(f"{path}: expected a mapping of schema names")
        count = 0
        for name, fields in data.items():
            if not isinstance(fields, dict):
                raise SchemaError(f"{path}: schema '{name}' must map fields to kinds")
            self.register(str(name), [(str(f), str(k)) for f, k in fields.items()])
            count += 1
        return count


def builtin_registry() -> SchemaRegistry:
    registry = SchemaRegistry()
    registry.register("Pose", [("x", "float"), ("y", "float"), ("theta", "float")])
    registry.register(
        "TeleportRequest", [("x", "float"), ("y", "float"), ("theta", "float")]
    )
    registry.register("Empty", [])
    return registry
