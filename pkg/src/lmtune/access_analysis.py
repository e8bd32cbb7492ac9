"""Static analysis of the template's target-array accesses.

Computes, in closed form, the three quantities the tuning decision hinges on:
inter-workitem reuse of the home access, DRAM transactions per warp for the
home access (coalescing), and the local-memory footprint a workgroup would
need to stage its accessed region. A brute-force enumeration twin lives in
`enumeration`; the two are held equal by tests.

All analyses are taken at a representative point: workgroup (0, 0), work-unit
iteration (0, 0). Under the pattern table the aggregate values are invariant
to that choice because every shift is a multiple of a power-of-two workgroup
dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .device import DEFAULT_DEVICE, DeviceDescriptor
from .errors import InvalidInstance
from .kernel_model import (
    HomeAccessPattern,
    KernelInstance,
    stencil_offsets,
    validate_instance,
)


@dataclass(frozen=True)
class AffineAccess:
    """Coefficients of the home coordinate as an affine map.

    row = row_wu_x*wu_x + row_wu_y*wu_y + row_i*i + row_j*j, same for col.
    Encodes the same pattern table as kernel_model.home_coordinate; the two
    encodings are cross-checked by tests.
    """

    row_wu_x: int
    row_wu_y: int
    row_i: int
    row_j: int
    col_wu_x: int
    col_wu_y: int
    col_i: int
    col_j: int


def pattern_affine(pattern: HomeAccessPattern, n: int, m: int) -> AffineAccess:
    p = HomeAccessPattern
    table = {
        p.XY_REUSE: (0, 0, 1, 0, 0, 0, 0, 1),
        p.X_REUSE_ROW: (0, 1, 0, 0, 0, 0, 0, 1),
        p.X_REUSE_COL: (0, 0, 0, 1, 0, 1, 0, 0),
        p.Y_REUSE_ROW: (1, 0, 0, 0, 0, 0, 0, 1),
        p.Y_REUSE_COL: (0, 0, 0, 1, 1, 0, 0, 0),
        p.NO_REUSE_ROW_MAJOR: (0, n, 1, 0, m, 0, 0, 1),
        p.NO_REUSE_COL_MAJOR: (0, m, 0, 1, n, 0, 1, 0),
    }
    return AffineAccess(*table[pattern])


def warp_transactions(addresses, dev: DeviceDescriptor = DEFAULT_DEVICE) -> int:
    """Number of DRAM transactions one warp needs for one access: the count of
    distinct transaction-sized segments touched by the byte addresses."""
    addrs = np.asarray(list(addresses), dtype=np.int64)
    if addrs.size == 0:
        return 0
    return int(np.unique(addrs // dev.transaction_bytes).size)


def reuse_degree(instance: KernelInstance) -> float:
    """Access-weighted mean number of distinct workitems touching each element
    the home access reads, over one workgroup at a fixed work-unit iteration.

    The pattern table makes this exact in closed form: a workitem's home
    coordinates are independent of wi_x and/or wi_y for the reuse patterns,
    and distinct otherwise.
    """
    af = pattern_affine(instance.params.pattern, instance.params.n, instance.params.m)
    share = 1
    if af.row_wu_x == 0 and af.col_wu_x == 0:
        share *= instance.launch.wg_x
    if af.row_wu_y == 0 and af.col_wu_y == 0:
        share *= instance.launch.wg_y
    return float(share)


def _lane_bases(instance: KernelInstance, dev: DeviceDescriptor) -> np.ndarray:
    """Byte address of each lane's home access at i = j = 0, representative
    workgroup. Lanes are linearized wi_x + wi_y * wg_x."""
    params, launch = instance.params, instance.launch
    af = pattern_affine(params.pattern, params.n, params.m)
    lanes = np.arange(launch.wg_size, dtype=np.int64)
    wi_x = lanes % launch.wg_x
    wi_y = lanes // launch.wg_x
    # at wg (0,0), iteration (0,0): wu_x = wi_x, wu_y = wi_y
    row = af.row_wu_x * wi_x + af.row_wu_y * wi_y
    col = af.col_wu_x * wi_x + af.col_wu_y * wi_y
    return (row * params.in_w + col) * dev.element_bytes


def _phase_weights(step: int, trips: int, tx: int) -> dict[int, int]:
    """How often each byte-alignment residue occurs as one inner loop runs.

    The loop shifts every lane's address by `step` per trip; only the residue
    modulo the transaction size affects the per-warp transaction count.
    """
    period = tx // math.gcd(step % tx, tx) if step % tx else 1
    weights: dict[int, int] = {}
    for a in range(min(trips, period)):
        count = (trips - a - 1) // period + 1
        weights[(a * step) % tx] = weights.get((a * step) % tx, 0) + count
    return weights


def coalescing_degree(instance: KernelInstance, dev: DeviceDescriptor = DEFAULT_DEVICE) -> float:
    """Mean DRAM transactions per warp for the home access, averaged over all
    warps of one workgroup and all (i, j) inner iterations.

    Exact: lane addresses are affine in (i, j), so iterations only matter
    through their address residue modulo the transaction size. The residue
    distribution is folded into weights and each (warp, residue) pair is
    counted once.
    """
    params, launch = instance.params, instance.launch
    af = pattern_affine(params.pattern, params.n, params.m)
    tx = dev.transaction_bytes
    eb = dev.element_bytes
    bases = _lane_bases(instance, dev)

    step_i = (af.row_i * params.in_w + af.col_i) * eb
    step_j = (af.row_j * params.in_w + af.col_j) * eb
    wi = _phase_weights(step_i, params.n, tx)
    wj = _phase_weights(step_j, params.m, tx)
    phases: dict[int, int] = {}
    for pa, wa in wi.items():
        for pb, wb in wj.items():
            key = (pa + pb) % tx
            phases[key] = phases.get(key, 0) + wa * wb
    phase_arr = np.fromiter(phases.keys(), dtype=np.int64)
    weight_arr = np.fromiter(phases.values(), dtype=np.int64)

    warp = dev.warp_size
    nwarps = (launch.wg_size + warp - 1) // warp
    total = 0
    for w in range(nwarps):
        lane_addrs = bases[w * warp : (w + 1) * warp]
        segs = (lane_addrs[None, :] + phase_arr[:, None]) // tx
        segs.sort(axis=1)
        counts = (np.diff(segs, axis=1) != 0).sum(axis=1) + 1
        total += int(counts @ weight_arr)
    return total / (nwarps * params.n * params.m)


@dataclass(frozen=True)
class Footprint:
    """Local-memory region one workgroup needs for its home accesses plus the
    stencil apron, at a fixed work-unit iteration."""

    row_span: int
    col_span: int
    padded_col_span: int
    bytes: int


def pad_col_span(col_span: int, dev: DeviceDescriptor) -> int:
    """Pad a row's element count for transaction-aligned cooperative copying.

    Spans of at least one transaction round up to whole transaction-sized
    segments; narrower spans round up to the next power of two so a row never
    straddles a segment boundary.
    """
    tx_elems = dev.transaction_elems
    if col_span % tx_elems == 0:
        return col_span
    if col_span > tx_elems:
        return ((col_span // tx_elems) + 1) * tx_elems
    return 1 << (col_span - 1).bit_length()


def footprint(instance: KernelInstance, dev: DeviceDescriptor = DEFAULT_DEVICE) -> Footprint:
    """Bounding box of one workgroup's home coordinates extended by the
    stencil extremes, with the column span alignment-padded."""
    params, launch = instance.params, instance.launch
    af = pattern_affine(params.pattern, params.n, params.m)
    offs = stencil_offsets(params.stencil)
    off_rows = [dr for dr, _ in offs]
    off_cols = [dc for _, dc in offs]
    # all affine coefficients are non-negative: min at the origin lane
    home_row_max = (
        af.row_wu_x * (launch.wg_x - 1)
        + af.row_wu_y * (launch.wg_y - 1)
        + af.row_i * (params.n - 1)
        + af.row_j * (params.m - 1)
    )
    home_col_max = (
        af.col_wu_x * (launch.wg_x - 1)
        + af.col_wu_y * (launch.wg_y - 1)
        + af.col_i * (params.n - 1)
        + af.col_j * (params.m - 1)
    )
    row_span = home_row_max + 1 + (max(off_rows) - min(off_rows))
    col_span = home_col_max + 1 + (max(off_cols) - min(off_cols))
    padded = pad_col_span(col_span, dev)
    return Footprint(
        row_span=row_span,
        col_span=col_span,
        padded_col_span=padded,
        bytes=row_span * padded * dev.element_bytes,
    )


FEATURE_NAMES = (
    "reuse_degree",
    "lmem_bytes",
    "noncoalescing_degree",
    "num_target_accesses",
    "offset_min_row",
    "offset_max_row",
    "offset_min_col",
    "offset_max_col",
    "comp_ilb",
    "comp_ep",
    "ctx_coal_ilb",
    "ctx_uncoal_ilb",
    "ctx_coal_ep",
    "ctx_uncoal_ep",
    "regs_per_thread",
    "grid_size",
    "wg_size",
    "wus_per_workitem",
)


@dataclass(frozen=True)
class FeatureVector:
    """The 18 features describing one kernel instance, in fixed order."""

    reuse_degree: float
    lmem_bytes: float
    noncoalescing_degree: float
    num_target_accesses: float
    offset_min_row: float
    offset_max_row: float
    offset_min_col: float
    offset_max_col: float
    comp_ilb: float
    comp_ep: float
    ctx_coal_ilb: float
    ctx_uncoal_ilb: float
    ctx_coal_ep: float
    ctx_uncoal_ep: float
    regs_per_thread: float
    grid_size: float
    wg_size: float
    wus_per_workitem: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    @classmethod
    def from_array(cls, arr) -> "FeatureVector":
        vals = [float(x) for x in arr]
        if len(vals) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features, got {len(vals)}")
        return cls(*vals)


def extract_features(
    instance: KernelInstance, dev: DeviceDescriptor = DEFAULT_DEVICE
) -> FeatureVector:
    """Assemble the feature vector for one instance.

    Register pressure is the cost model's estimate for the unoptimized
    variant; local-memory bytes are the staging footprint whether or not it
    fits the device.
    """
    from .cost_model import Variant, estimate_registers  # cycle: cost model uses these analyses

    violations = validate_instance(instance)
    if violations:
        raise InvalidInstance(violations)
    params, launch = instance.params, instance.launch
    offs = stencil_offsets(params.stencil)
    fp = footprint(instance, dev)
    return FeatureVector(
        reuse_degree=reuse_degree(instance),
        lmem_bytes=float(fp.bytes),
        noncoalescing_degree=coalescing_degree(instance, dev),
        num_target_accesses=float(len(offs)),
        offset_min_row=float(min(dr for dr, _ in offs)),
        offset_max_row=float(max(dr for dr, _ in offs)),
        offset_min_col=float(min(dc for _, dc in offs)),
        offset_max_col=float(max(dc for _, dc in offs)),
        comp_ilb=float(params.num_comp_ilb),
        comp_ep=float(params.num_comp_ep),
        ctx_coal_ilb=float(params.num_coal_ilb),
        ctx_uncoal_ilb=float(params.num_uncoal_ilb),
        ctx_coal_ep=float(params.num_coal_ep),
        ctx_uncoal_ep=float(params.num_uncoal_ep),
        regs_per_thread=float(estimate_registers(params, Variant.BASELINE, dev)),
        grid_size=float(launch.grid_size),
        wg_size=float(launch.wg_size),
        wus_per_workitem=float(instance.wus_per_workitem),
    )
