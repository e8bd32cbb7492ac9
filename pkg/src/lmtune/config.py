"""Run configuration: flat key=value text with section prefixes.

Sections mirror the dataclasses they populate: `device.` for hardware
constants, `sampling.` for dataset generation, `forest.` for hyperparameters,
`paths.` for file locations; `train_fraction` sits at the top level.
Environment variables prefixed LMT_ override file values (LMT_DEVICE_WARP_SIZE
-> device.warp_size, LMT_TRAIN_FRACTION -> train_fraction).
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields

from .dataset import SamplingSpec
from .device import DeviceDescriptor
from .errors import ConfigError
from .forest import Hyperparams

ENV_PREFIX = "LMT_"
_SECTIONS = ("device", "sampling", "forest", "paths")


@dataclass(frozen=True)
class Paths:
    dataset: str = "dataset.csv"
    model: str = "model.txt"
    report: str = "report.txt"
    report_kv: str = "report.kv"
    histogram: str = "histogram.csv"
    skip_log: str = "skips.log"
    kernels_dir: str = "kernels"


@dataclass(frozen=True)
class RunConfig:
    device: DeviceDescriptor = DeviceDescriptor()
    sampling: SamplingSpec = SamplingSpec()
    forest: Hyperparams = Hyperparams()
    paths: Paths = Paths()
    train_fraction: float = 0.10

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError(f"train_fraction {self.train_fraction} outside (0, 1)")


def parse_kv_text(text: str) -> dict[str, str]:
    """key=value per line; blank lines and # comments ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def env_overrides(environ=None) -> dict[str, str]:
    """Translate LMT_* variables to config keys. The first underscore-separated
    token selects the section when it names one; otherwise the whole tail is a
    top-level key."""
    environ = os.environ if environ is None else environ
    out: dict[str, str] = {}
    for name, value in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        tail = name[len(ENV_PREFIX) :].lower()
        head, _, rest = tail.partition("_")
        if head in _SECTIONS and rest:
            out[f"{head}.{rest}"] = value
        else:
            out[tail] = value
    return out


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: invalid integer {value!r}") from None


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: invalid number {value!r}") from None


def _parse_bool(key: str, value: str) -> bool:
    low = value.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: invalid boolean {value!r}")


def _parse_field(key: str, value: str, ftype):
    if ftype is int or ftype == "int":
        return _parse_int(key, value)
    if ftype is float or ftype == "float":
        return _parse_float(key, value)
    if ftype is bool or ftype == "bool":
        return _parse_bool(key, value)
    if ftype is str or ftype == "str":
        return value
    if ftype == "int | None" or ftype == "Optional[int]":
        return None if value.lower() in ("none", "") else _parse_int(key, value)
    if ftype == "tuple[int, int]":
        parts = value.split(":")
        if len(parts) != 2:
            raise ConfigError(f"{key}: expected lo:hi, got {value!r}")
        return (_parse_int(key, parts[0]), _parse_int(key, parts[1]))
    if ftype == "tuple[int, ...]":
        parts = [p for p in value.split(",") if p.strip()]
        if not parts:
            raise ConfigError(f"{key}: expected a comma-separated list, got {value!r}")
        return tuple(_parse_int(key, p.strip()) for p in parts)
    raise ConfigError(f"{key}: unsupported field type {ftype!r}")


def _apply_section(obj, section: str, updates: dict[str, str]):
    by_name = {f.name: f for f in fields(obj)}
    parsed = {}
    for name, value in updates.items():
        f = by_name.get(name)
        if f is None:
            raise ConfigError(f"unknown config key '{section}.{name}'")
        parsed[name] = _parse_field(f"{section}.{name}", value, f.type)
    try:
        return dataclasses.replace(obj, **parsed)
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def build_config(pairs: dict[str, str], base: RunConfig | None = None) -> RunConfig:
    base = RunConfig() if base is None else base
    sections: dict[str, dict[str, str]] = {s: {} for s in _SECTIONS}
    top: dict[str, str] = {}
    for key, value in pairs.items():
        head, dot, rest = key.partition(".")
        if dot:
            if head not in sections or not rest:
                raise ConfigError(f"unknown config key {key!r}")
            sections[head][rest] = value
        elif key == "train_fraction":
            top[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")

    device = _apply_section(base.device, "device", sections["device"])
    sampling = _apply_section(base.sampling, "sampling", sections["sampling"])
    forest = _apply_section(base.forest, "forest", sections["forest"])
    paths = _apply_section(base.paths, "paths", sections["paths"])
    fraction = (
        _parse_float("train_fraction", top["train_fraction"])
        if "train_fraction" in top
        else base.train_fraction
    )
    try:
        return RunConfig(
            device=device, sampling=sampling, forest=forest, paths=paths, train_fraction=fraction
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path=None, environ=None) -> RunConfig:
    """Defaults, then the config file (if any), then LMT_ environment
    overrides, later layers winning per key."""
    pairs: dict[str, str] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                pairs.update(parse_kv_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    pairs.update(env_overrides(environ))
    return build_config(pairs)
