"""Device descriptor: every hardware constant the analyses and the cost model
consume. Defaults describe a generic desktop GPU of the Fermi/Kepler class."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .kernel_model import is_power_of_two


@dataclass(frozen=True)
class DeviceDescriptor:
    transaction_bytes: int = 128
    warp_size: int = 32
    element_bytes: int = 4
    lmem_capacity_bytes: int = 48 * 1024
    register_file_per_sm: int = 32768
    max_regs_per_thread: int = 63
    max_warps_per_sm: int = 48
    max_workgroups_per_sm: int = 8
    dram_latency_cycles: int = 400
    issue_cycles_per_op: int = 4

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")
        if not is_power_of_two(self.transaction_bytes):
            raise ValueError(f"transaction_bytes {self.transaction_bytes} is not a power of two")
        if not is_power_of_two(self.warp_size):
            raise ValueError(f"warp_size {self.warp_size} is not a power of two")
        if self.transaction_bytes % self.element_bytes != 0:
            raise ValueError("transaction_bytes must be a multiple of element_bytes")

    @property
    def transaction_elems(self) -> int:
        return self.transaction_bytes // self.element_bytes


DEFAULT_DEVICE = DeviceDescriptor()
