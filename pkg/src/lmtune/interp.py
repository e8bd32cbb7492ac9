"""Reference interpreter for the emitted kernels' semantics.

Executes the template's index arithmetic and float32 arithmetic on the host,
workgroup by workgroup, without an OpenCL runtime. The optimized variant is
executed with a real staging buffer: cells are poisoned with NaN before each
cooperative copy, the copy follows the emitted segment/warp/lane mapping, and
every stencil read goes through region-relative indexing with bounds checks.
A staging bug therefore shows up as NaN, an index fault, or a baseline
mismatch rather than silently agreeing.
"""

from __future__ import annotations

import numpy as np

from .access_analysis import pattern_affine
from .codegen import Variant, emit_geometry, mad_constants
from .device import DEFAULT_DEVICE, DeviceDescriptor
from .kernel_model import KernelInstance, stencil_offsets


def _hash_fill(count: int, salt: int) -> np.ndarray:
    """Deterministic pseudo-random float32 values in [-0.5, 0.5); the same
    integer recurrence is reproducible from C."""
    idx = np.arange(count, dtype=np.uint64) + np.uint64(salt)
    bits = (idx * np.uint64(2654435761)) & np.uint64(0xFFFFFFFF)
    return (bits.astype(np.float64) / 2**32 - 0.5).astype(np.float32)


def make_inputs(
    instance: KernelInstance, dev: DeviceDescriptor = DEFAULT_DEVICE
) -> tuple[np.ndarray, np.ndarray]:
    """Allocate and fill the `in` (with apron margins) and `in2` arrays."""
    geo = emit_geometry(instance, dev)
    params = instance.params
    in_arr = _hash_fill(geo.alloc_h * geo.alloc_w, salt=0).reshape(geo.alloc_h, geo.alloc_w)
    in2 = _hash_fill(params.in_h * params.in_w, salt=1).reshape(params.in_h, params.in_w)
    return in_arr, in2


def execute(
    instance: KernelInstance,
    variant: Variant,
    in_arr: np.ndarray,
    in2: np.ndarray,
    dev: DeviceDescriptor = DEFAULT_DEVICE,
) -> np.ndarray:
    """Run one variant over the full launch and return the out array."""
    params, launch = instance.params, instance.launch
    geo = emit_geometry(instance, dev)
    af = pattern_affine(params.pattern, params.n, params.m)
    offs = stencil_offsets(params.stencil)
    out = np.full((params.out_h, params.out_w), np.nan, dtype=np.float32)
    in2_h, in2_w = params.in_h, params.in_w
    nwx, nwy = instance.num_wus_x, instance.num_wus_y
    wg_w, wg_h = launch.wg_x, launch.wg_y
    lanes = np.arange(launch.wg_size)
    wi_x = lanes % wg_w
    wi_y = lanes // wg_w
    pad = geo.pad

    for gy in range(launch.grid_y // wg_h):
        for gx in range(launch.grid_x // wg_w):
            glin = (gy * wg_h + wi_y) * launch.grid_x + (gx * wg_w + wi_x)
            for it_y in range(nwy):
                for it_x in range(nwx):
                    wu_x0 = gx * (wg_w * nwx) + it_x * wg_w
                    wu_y0 = gy * (wg_h * nwy) + it_y * wg_h
                    wu_x = wu_x0 + wi_x
                    wu_y = wu_y0 + wi_y
                    if variant is Variant.OPTIMIZED:
                        org_row = geo.org_row_wu_x * wu_x0 + geo.org_row_wu_y * wu_y0 + geo.off_min_row
                        org_col = geo.org_col_wu_x * wu_x0 + geo.org_col_wu_y * wu_y0 + geo.off_min_col
                        region = np.full(geo.r_rows * geo.r_cols_pad, np.nan, dtype=np.float32)
                        for w in range(geo.num_warps):
                            for seg in range(w, geo.num_segs, geo.num_warps):
                                seg_row = seg // geo.segs_per_row
                                seg_col = (seg % geo.segs_per_row) * geo.seg_elems
                                es = np.arange(geo.seg_elems)
                                region[seg_row * geo.r_cols_pad + seg_col + es] = in_arr[
                                    org_row + seg_row + pad, org_col + seg_col + es + pad
                                ]
                    acc = np.zeros(launch.wg_size, dtype=np.float32)
                    for i in range(params.n):
                        for j in range(params.m):
                            idx_o = af.row_wu_x * wu_x + af.row_wu_y * wu_y + af.row_i * i + af.row_j * j
                            idx_i = af.col_wu_x * wu_x + af.col_wu_y * wu_y + af.col_i * i + af.col_j * j
                            for dr, dc in offs:
                                if variant is Variant.BASELINE:
                                    acc += in_arr[idx_o + dr + pad, idx_i + dc + pad]
                                else:
                                    rr = idx_o + dr - org_row
                                    cc = idx_i + dc - org_col
                                    if rr.min() < 0 or rr.max() >= geo.r_rows:
                                        raise IndexError("region row index out of range")
                                    if cc.min() < 0 or cc.max() >= geo.r_cols_pad:
                                        raise IndexError("region col index out of range")
                                    acc += region[rr * geo.r_cols_pad + cc]
                            for k in range(params.num_comp_ilb):
                                c1, c2 = mad_constants(k)
                                acc = acc * np.float32(c1) + np.float32(c2)
                            for k in range(params.num_coal_ilb):
                                acc += in2[(i * params.m + j + k) % in2_h, glin % in2_w]
                            for k in range(params.num_uncoal_ilb):
                                acc += in2[glin % in2_h, (i * params.m + j + k) % in2_w]
                    for k in range(params.num_comp_ep):
                        c1, c2 = mad_constants(params.num_comp_ilb + k)
                        acc = acc * np.float32(c1) + np.float32(c2)
                    for k in range(params.num_coal_ep):
                        acc += in2[(params.n * params.m + k) % in2_h, glin % in2_w]
                    for k in range(params.num_uncoal_ep):
                        acc += in2[glin % in2_h, (params.n * params.m + k) % in2_w]
                    out[wu_y, wu_x] = acc
    return out


def run_pair(
    instance: KernelInstance, dev: DeviceDescriptor = DEFAULT_DEVICE
) -> tuple[np.ndarray, np.ndarray]:
    """Execute both variants on identical inputs; returns (baseline, optimized)."""
    in_arr, in2 = make_inputs(instance, dev)
    base = execute(instance, Variant.BASELINE, in_arr, in2, dev)
    opt = execute(instance, Variant.OPTIMIZED, in_arr, in2, dev)
    return base, opt
