"""Exception types shared across the toolkit."""

from __future__ import annotations


class LmtuneError(Exception):
    """Base class for all toolkit errors."""


class InvalidInstance(LmtuneError):
    """A kernel instance violates template or launch constraints."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(violations))


class OptimizationInfeasible(LmtuneError):
    """The staging region exceeds local-memory capacity."""

    def __init__(self, lmem_bytes: int, capacity: int):
        self.lmem_bytes = lmem_bytes
        self.capacity = capacity
        super().__init__(f"local-memory footprint {lmem_bytes} bytes exceeds capacity {capacity}")


class DatasetFormatError(LmtuneError):
    """A persisted dataset file cannot be parsed back losslessly."""


class ModelFormatError(LmtuneError):
    """A persisted forest file is malformed."""


class ConfigError(LmtuneError):
    """A config file, environment override, or CLI value is invalid."""
