"""Deterministic analytical cost model that labels an instance with the
speedup the local-memory rewrite would deliver.

Per work unit, a variant pays compute cycles C and memory transactions M_tx;
the modeled time is wus_per_workitem * (max(C, M_tx*issue) + M_tx*latency /
active_warps). The baseline pays the home access's coalescing cost every
inner iteration; the optimized variant pays the cooperative copy once per
work-unit iteration plus one issue cycle per stencil read served from local
memory. Contextual in2 traffic is identical on both sides. The label is
T_baseline / T_optimized, or 0.0 when the staging region cannot fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .access_analysis import coalescing_degree, footprint
from .codegen import Variant, copy_transaction_count
from .device import DEFAULT_DEVICE, DeviceDescriptor
from .errors import OptimizationInfeasible
from .kernel_model import KernelInstance, TemplateParams, stencil_offsets


@dataclass(frozen=True)
class ResourceUsage:
    regs_per_thread: int
    lmem_per_wg: int
    wg_size: int
    warps_per_wg: int


@dataclass(frozen=True)
class TimeEstimate:
    compute_cycles: float
    mem_transactions: float
    active_warps: float
    total_cycles: float


def estimate_registers(
    params: TemplateParams, variant: Variant, dev: DeviceDescriptor = DEFAULT_DEVICE
) -> int:
    """Register pressure heuristic. The optimized variant always costs 4 more
    (region origin and copy bookkeeping), even past the clamp ceiling."""
    num_target = len(stencil_offsets(params.stencil))
    ctx_total = (
        params.num_coal_ilb + params.num_coal_ep + params.num_uncoal_ilb + params.num_uncoal_ep
    )
    raw = (
        10
        + num_target
        + math.ceil(params.num_comp_ilb / 4)
        + math.ceil(params.num_comp_ep / 8)
        + 2 * ctx_total
    )
    base = min(max(raw, 10), dev.max_regs_per_thread)
    if variant is Variant.OPTIMIZED:
        return base + 4
    return base


def resource_usage(
    instance: KernelInstance,
    variant: Variant,
    dev: DeviceDescriptor = DEFAULT_DEVICE,
    lmem_bytes: int | None = None,
) -> ResourceUsage:
    """Per-workgroup resources one variant occupies. `lmem_bytes` defaults to
    0 for the baseline and the staging footprint for the optimized variant."""
    if lmem_bytes is None:
        lmem_bytes = 0 if variant is Variant.BASELINE else footprint(instance, dev).bytes
    wg_size = instance.launch.wg_size
    return ResourceUsage(
        regs_per_thread=estimate_registers(instance.params, variant, dev),
        lmem_per_wg=lmem_bytes,
        wg_size=wg_size,
        warps_per_wg=(wg_size + dev.warp_size - 1) // dev.warp_size,
    )


def occupancy(usage: ResourceUsage, dev: DeviceDescriptor = DEFAULT_DEVICE) -> float:
    """Active warps per SM under the workgroup/register/local-memory/warp
    limits, floored at one warp so latency division never blows up."""
    limits = [dev.max_workgroups_per_sm]
    if usage.lmem_per_wg > 0:
        limits.append(dev.lmem_capacity_bytes // usage.lmem_per_wg)
    limits.append(dev.register_file_per_sm // (usage.regs_per_thread * usage.wg_size))
    limits.append(dev.max_warps_per_sm // usage.warps_per_wg)
    workgroups = min(limits)
    return float(max(1, workgroups * usage.warps_per_wg))


def kernel_time(
    instance: KernelInstance,
    variant: Variant,
    dev: DeviceDescriptor = DEFAULT_DEVICE,
    *,
    coalescing_override: float | None = None,
    lmem_override: int | None = None,
) -> TimeEstimate:
    """Modeled execution time of one variant, in cycles per workitem.

    The override hooks substitute an assumed home-access coalescing degree or
    staging footprint size for what-if sweeps; they leave all other terms
    untouched.

    Raises OptimizationInfeasible if the optimized variant's staging region
    exceeds local-memory capacity.
    """
    params = instance.params
    nm = params.n * params.m
    num_target = len(stencil_offsets(params.stencil))
    issue = dev.issue_cycles_per_op
    ctx_inner_tx = params.num_coal_ilb + params.num_uncoal_ilb * dev.warp_size
    ctx_ep_tx = params.num_coal_ep + params.num_uncoal_ep * dev.warp_size

    compute = issue * (params.num_comp_ilb * nm + params.num_comp_ep)
    if variant is Variant.BASELINE:
        coal = (
            coalescing_degree(instance, dev) if coalescing_override is None else coalescing_override
        )
        mem_tx = nm * (num_target * coal + ctx_inner_tx) + ctx_ep_tx
        usage = resource_usage(instance, variant, dev)
    else:
        fp = footprint(instance, dev)
        lmem = fp.bytes if lmem_override is None else lmem_override
        if lmem > dev.lmem_capacity_bytes:
            raise OptimizationInfeasible(lmem, dev.lmem_capacity_bytes)
        usage = resource_usage(instance, variant, dev, lmem_bytes=lmem)
        mem_tx = copy_transaction_count(fp, dev) / usage.warps_per_wg + nm * ctx_inner_tx + ctx_ep_tx
        compute += num_target * nm  # local reads: one issue cycle each

    active = occupancy(usage, dev)
    per_wu = max(compute, mem_tx * issue) + mem_tx * dev.dram_latency_cycles / active
    return TimeEstimate(
        compute_cycles=float(compute),
        mem_transactions=float(mem_tx),
        active_warps=active,
        total_cycles=instance.wus_per_workitem * per_wu,
    )


def label_speedup(
    instance: KernelInstance,
    dev: DeviceDescriptor = DEFAULT_DEVICE,
    *,
    coalescing_override: float | None = None,
    lmem_override: int | None = None,
) -> float:
    """Speedup of the optimized variant over the baseline; 0.0 when staging
    is infeasible (the caller records the instance as not beneficial)."""
    base = kernel_time(instance, Variant.BASELINE, dev, coalescing_override=coalescing_override)
    try:
        opt = kernel_time(instance, Variant.OPTIMIZED, dev, lmem_override=lmem_override)
    except OptimizationInfeasible:
        return 0.0
    return base.total_cycles / opt.total_cycles
