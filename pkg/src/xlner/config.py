"""Line-oriented ``key = value`` configuration with command-line overrides.

Every problem found while resolving a configuration is collected, so a
single run reports all of them before any work starts.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .projection import SelectionThresholds

INPUT = "input"
OUTPUT = "output"


class ConfigError(ValueError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Option:
    name: str
    type: Callable[[str], Any] = str
    default: Any = None
    required: bool = False
    role: str | None = None  # INPUT paths must exist, OUTPUT parents must exist
    choices: tuple = ()
    help: str = ""

    @property
    def key(self) -> str:
        return self.name.replace("-", "_")


def boolean(text: str) -> bool:
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def thresholds(text: str) -> SelectionThresholds | str:
    """``auto`` or ``q,n``."""
    text = str(text).strip()
    if text == "auto":
        return "auto"
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected 'auto' or 'q,n', got {text!r}")
    return SelectionThresholds(float(parts[0]), int(parts[1]))


def ridge(text: str) -> float | str:
    text = str(text).strip()
    if text == "auto":
        return "auto"
    value = float(text)
    if value < 0:
        raise ValueError("ridge must be >= 0")
    return value


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError(f"expected a positive integer, got {value}")
    return value


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys use - or _."""
    values, errors = {}, []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                errors.append(f"{path}:{lineno}: expected 'key = value'")
                continue
            values[key.strip().replace("-", "_")] = value.strip()
    if errors:
        raise ConfigError(errors)
    return values


class PipelineConfig:
    """Resolved settings of one command, readable as attributes."""

    def __init__(self, command: str, values: Mapping[str, Any]):
        self.command = command
        self._values = dict(values)

    def __getattr__(self, name: str) -> Any:
        try:
            return self._values[name]
        except KeyError:
            raise AttributeError(name) from None

    def get(self, name: str, default: Any = None) -> Any:
        value = self._values.get(name)
        return default if value is None else value

    def as_dict(self) -> dict[str, Any]:
        return dict(self._values)


def resolve(
    command: str,
    options: Iterable[Option],
    flags: Mapping[str, Any],
    file_values: Mapping[str, str] | None = None,
    checks: Iterable[Callable[[PipelineConfig], str | None]] = (),
) -> PipelineConfig:
    """Merge defaults, file values and flags (flags win), then validate.

    ``flags`` holds already-typed values with None meaning "not given";
    file values are strings and are converted here.
    """
    options = list(options)
    by_key = {o.key: o for o in options}
    file_values = dict(file_values or {})
    errors = [f"unknown configuration key {k!r}" for k in sorted(set(file_values) - set(by_key) - {"config"})]
    values: dict[str, Any] = {}
    for opt in options:
        value = flags.get(opt.key)
        if value is None and opt.key in file_values:
            try:
                value = opt.type(file_values[opt.key])
            except (TypeError, ValueError) as exc:
                errors.append(f"{opt.name}: {exc}")
                continue
        if value is None:
            value = opt.default
        if value is None:
            if opt.required:
                errors.append(f"{opt.name} is required")
            values[opt.key] = None
            continue
        if opt.choices and value not in opt.choices:
            errors.append(f"{opt.name}: {value!r} is not one of {', '.join(map(str, opt.choices))}")
        if opt.role == INPUT and not os.path.exists(value):
            errors.append(f"{opt.name}: input path {value} does not exist")
        if opt.role == OUTPUT and value != "-":
            parent = os.path.dirname(os.path.abspath(value))
            if not os.path.isdir(parent):
                errors.append(f"{opt.name}: directory {parent} does not exist")
        values[opt.key] = value
    config = PipelineConfig(command, values)
    if not errors:
        for check in checks:
            message = check(config)
            if message:
                errors.append(message)
    if errors:
        raise ConfigError(errors)
    return config
