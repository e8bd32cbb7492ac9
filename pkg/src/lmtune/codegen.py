"""OpenCL C source emission for the two kernel variants.

The baseline variant reads the target array `in` directly per inner
iteration. The optimized variant stages, once per work-unit iteration, the
workgroup's accessed region into local memory with a warp-cyclic
transaction-aligned cooperative copy, then serves every stencil read from the
region. Contextual `in2` accesses and the epilogue are identical across
variants, so the pair computes identical outputs.

Template knobs (geometry, launch, region dimensions) are referenced as
macros; values are carried in `compile_defines` and also baked into the
source as #ifndef-guarded defaults so a .cl file is self-contained while a
-D binding can still override it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .access_analysis import Footprint, footprint, pattern_affine
from .device import DEFAULT_DEVICE, DeviceDescriptor
from .errors import InvalidInstance, OptimizationInfeasible
from .kernel_model import (
    HomeAccessPattern,
    KernelInstance,
    TemplateParams,
    stencil_offsets,
    validate_instance,
)


class Variant(enum.Enum):
    BASELINE = "baseline"
    OPTIMIZED = "optimized"


@dataclass(frozen=True)
class KernelSource:
    variant: Variant
    entry_name: str
    source_text: str
    compile_defines: tuple[tuple[str, int], ...]


# C expressions for the home coordinate, per pattern: (row, col)
_HOME_EXPR = {
    HomeAccessPattern.XY_REUSE: ("i", "j"),
    HomeAccessPattern.X_REUSE_ROW: ("wu_y", "j"),
    HomeAccessPattern.X_REUSE_COL: ("j", "wu_y"),
    HomeAccessPattern.Y_REUSE_ROW: ("wu_x", "j"),
    HomeAccessPattern.Y_REUSE_COL: ("j", "wu_x"),
    HomeAccessPattern.NO_REUSE_ROW_MAJOR: ("wu_y * N + i", "wu_x * M + j"),
    HomeAccessPattern.NO_REUSE_COL_MAJOR: ("wu_y * M + j", "wu_x * N + i"),
}


def mad_constants(k: int) -> tuple[float, float]:
    """Multiplier/addend pair of the k-th multiply-add in a chain. The 2.0/0.5
    alternation keeps the accumulator bounded; all values are exact binary
    fractions so every toolchain computes identical results."""
    c1 = 2.0 if k % 2 == 0 else 0.5
    c2 = (1 + k % 5) / 64.0
    if k % 2 == 1:
        c2 = -c2
    return c1, c2


@dataclass(frozen=True)
class EmitGeometry:
    """Everything index arithmetic in the emitted source depends on. The
    reference interpreter mirrors these numbers exactly."""

    pad: int
    off_min_row: int
    off_min_col: int
    r_rows: int
    r_cols: int
    r_cols_pad: int
    seg_elems: int
    segs_per_row: int
    num_segs: int
    num_warps: int
    lanes_per_warp: int
    alloc_h: int
    alloc_w: int
    # region origin = org_row_wu_x*wu_x0 + org_row_wu_y*wu_y0 + off_min_row
    org_row_wu_x: int
    org_row_wu_y: int
    org_col_wu_x: int
    org_col_wu_y: int


def emit_geometry(
    instance: KernelInstance, dev: DeviceDescriptor = DEFAULT_DEVICE, fp: Footprint | None = None
) -> EmitGeometry:
    params, launch = instance.params, instance.launch
    if fp is None:
        fp = footprint(instance, dev)
    af = pattern_affine(params.pattern, params.n, params.m)
    offs = stencil_offsets(params.stencil)
    off_min_row = min(dr for dr, _ in offs)
    off_min_col = min(dc for _, dc in offs)
    seg_elems = min(dev.transaction_elems, fp.padded_col_span)
    segs_per_row = fp.padded_col_span // seg_elems
    wg_size = launch.wg_size
    num_warps = (wg_size + dev.warp_size - 1) // dev.warp_size
    # the last workgroup block at its last iteration holds the largest origin
    max_wu_x0 = params.out_w - launch.wg_x
    max_wu_y0 = params.out_h - launch.wg_y
    max_org_row = af.row_wu_x * max_wu_x0 + af.row_wu_y * max_wu_y0 + off_min_row
    max_org_col = af.col_wu_x * max_wu_x0 + af.col_wu_y * max_wu_y0 + off_min_col
    pad = params.stencil.radius
    return EmitGeometry(
        pad=pad,
        off_min_row=off_min_row,
        off_min_col=off_min_col,
        r_rows=fp.row_span,
        r_cols=fp.col_span,
        r_cols_pad=fp.padded_col_span,
        seg_elems=seg_elems,
        segs_per_row=segs_per_row,
        num_segs=fp.row_span * segs_per_row,
        num_warps=num_warps,
        lanes_per_warp=min(dev.warp_size, wg_size),
        alloc_h=pad + max_org_row + fp.row_span,
        alloc_w=pad + max_org_col + fp.padded_col_span,
        org_row_wu_x=af.row_wu_x,
        org_row_wu_y=af.row_wu_y,
        org_col_wu_x=af.col_wu_x,
        org_col_wu_y=af.col_wu_y,
    )


def copy_transaction_count(fp: Footprint, dev: DeviceDescriptor = DEFAULT_DEVICE) -> int:
    """DRAM transactions the cooperative copy issues to stage one region:
    whole transaction-sized row segments, at least one per row."""
    segs_per_row = -(-fp.padded_col_span * dev.element_bytes // dev.transaction_bytes)
    return fp.row_span * segs_per_row


def kernel_filename(params: TemplateParams, variant: Variant) -> str:
    s = params.stencil
    return (
        f"{params.pattern.value}_{params.n}x{params.m}_"
        f"{s.shape.value}{s.radius}_{variant.value}.cl"
    )


def _compile_defines(
    instance: KernelInstance, geo: EmitGeometry, dev: DeviceDescriptor
) -> tuple[tuple[str, int], ...]:
    params, launch = instance.params, instance.launch
    return (
        ("IN_H", params.in_h),
        ("IN_W", params.in_w),
        ("OUT_H", params.out_h),
        ("OUT_W", params.out_w),
        ("N", params.n),
        ("M", params.m),
        ("GRID_X", launch.grid_x),
        ("GRID_Y", launch.grid_y),
        ("WG_W", launch.wg_x),
        ("WG_H", launch.wg_y),
        ("NUM_WUS_X", instance.num_wus_x),
        ("NUM_WUS_Y", instance.num_wus_y),
        ("WARP_SIZE", dev.warp_size),
        ("PAD", geo.pad),
        ("IN_ALLOC_H", geo.alloc_h),
        ("IN_ALLOC_W", geo.alloc_w),
        ("IN2_H", params.in_h),
        ("IN2_W", params.in_w),
        ("R_ROWS", geo.r_rows),
        ("R_COLS_PAD", geo.r_cols_pad),
        ("SEG_ELEMS", geo.seg_elems),
        ("SEGS_PER_ROW", geo.segs_per_row),
        ("NUM_SEGS", geo.num_segs),
        ("NUM_WARPS", geo.num_warps),
        ("LANES_PER_WARP", geo.lanes_per_warp),
        ("OFF_MIN_ROW", geo.off_min_row),
        ("OFF_MIN_COL", geo.off_min_col),
    )


def _off_expr(base: str, off: int) -> str:
    if off == 0:
        return base
    if off > 0:
        return f"{base} + {off}"
    return f"{base} - {-off}"


def _c_float(v: float) -> str:
    return f"{v!r}f"


def _org_expr(coef_x: int, coef_y: int, off_min: int) -> str:
    terms = []
    if coef_x:
        terms.append("wu_x0" if coef_x == 1 else f"{coef_x} * wu_x0")
    if coef_y:
        terms.append("wu_y0" if coef_y == 1 else f"{coef_y} * wu_y0")
    terms.append(str(off_min) if off_min >= 0 else f"({off_min})")
    return " + ".join(terms)


def _inner_body(params: TemplateParams, variant: Variant, indent: str) -> list[str]:
    """The i/j loop body: stencil reads, multiply-add chain, contextual reads."""
    row_expr, col_expr = _HOME_EXPR[params.pattern]
    lines = [
        f"{indent}const int idx_o = {row_expr};",
        f"{indent}const int idx_i = {col_expr};",
    ]
    at = "IN_AT" if variant is Variant.BASELINE else "REGION_AT"
    for dr, dc in stencil_offsets(params.stencil):
        lines.append(f"{indent}acc += {at}({_off_expr('idx_o', dr)}, {_off_expr('idx_i', dc)});")
    for k in range(params.num_comp_ilb):
        c1, c2 = mad_constants(k)
        lines.append(f"{indent}acc = MAD(acc, {_c_float(c1)}, {_c_float(c2)});")
    for k in range(params.num_coal_ilb):
        lines.append(f"{indent}acc += IN2_AT((i * M + j + {k}) % IN2_H, glin % IN2_W);")
    for k in range(params.num_uncoal_ilb):
        lines.append(f"{indent}acc += IN2_AT(glin % IN2_H, (i * M + j + {k}) % IN2_W);")
    return lines


def _epilogue(params: TemplateParams, indent: str) -> list[str]:
    lines = [f"{indent}/* epilogue */"]
    for k in range(params.num_comp_ep):
        c1, c2 = mad_constants(params.num_comp_ilb + k)
        lines.append(f"{indent}acc = MAD(acc, {_c_float(c1)}, {_c_float(c2)});")
    for k in range(params.num_coal_ep):
        lines.append(f"{indent}acc += IN2_AT((N * M + {k}) % IN2_H, glin % IN2_W);")
    for k in range(params.num_uncoal_ep):
        lines.append(f"{indent}acc += IN2_AT(glin % IN2_H, (N * M + {k}) % IN2_W);")
    lines.append(f"{indent}OUT_AT(wu_y, wu_x) = acc;")
    return lines


def _emit(instance: KernelInstance, variant: Variant, geo: EmitGeometry, dev: DeviceDescriptor) -> KernelSource:
    violations = validate_instance(instance)
    if violations:
        raise InvalidInstance(violations)
    params = instance.params
    defines = _compile_defines(instance, geo, dev)
    entry = f"synth_{variant.value}"

    head = [
        f"/* synthetic stencil kernel: pattern={params.pattern.value} n={params.n} m={params.m}",
        f"   stencil={params.stencil.shape.value} radius={params.stencil.radius} variant={variant.value} */",
        "",
    ]
    for name, value in defines:
        head += [f"#ifndef {name}", f"#define {name} {value}", "#endif"]
    head += [
        "",
        "#ifndef MAD",
        "#define MAD(a, b, c) ((a) * (b) + (c))",
        "#define IN_AT(r, c) in[(size_t)((r) + PAD) * IN_ALLOC_W + (size_t)((c) + PAD)]",
        "#define IN2_AT(r, c) in2[(size_t)(r) * IN2_W + (size_t)(c)]",
        "#define OUT_AT(r, c) out[(size_t)(r) * OUT_W + (size_t)(c)]",
        "#endif",
        "",
    ]

    body = [
        f"__kernel void {entry}(",
        "    __global const float *in,",
        "    __global const float *in2,",
        "    __global float *out)",
        "{",
    ]
    if variant is Variant.OPTIMIZED:
        body.append("    #define REGION_AT(r, c) region[((r) - org_row) * R_COLS_PAD + ((c) - org_col)]")
        body.append("    __local float region[R_ROWS * R_COLS_PAD];")
    body += [
        "    const int wi_x = (int)get_local_id(0);",
        "    const int wi_y = (int)get_local_id(1);",
        "    const int grp_x = (int)get_group_id(0);",
        "    const int grp_y = (int)get_group_id(1);",
        "    const int glin = (int)get_global_id(1) * GRID_X + (int)get_global_id(0);",
        "",
        "    for (int iter_y = 0; iter_y < NUM_WUS_Y; ++iter_y) {",
        "        for (int iter_x = 0; iter_x < NUM_WUS_X; ++iter_x) {",
        "            const int wu_x0 = grp_x * (WG_W * NUM_WUS_X) + iter_x * WG_W;",
        "            const int wu_y0 = grp_y * (WG_H * NUM_WUS_Y) + iter_y * WG_H;",
        "            const int wu_x = wu_x0 + wi_x;",
        "            const int wu_y = wu_y0 + wi_y;",
    ]
    if variant is Variant.OPTIMIZED:
        org_row = _org_expr(geo.org_row_wu_x, geo.org_row_wu_y, geo.off_min_row)
        org_col = _org_expr(geo.org_col_wu_x, geo.org_col_wu_y, geo.off_min_col)
        body += [
            f"            const int org_row = {org_row};",
            f"            const int org_col = {org_col};",
            "            /* cooperative copy: segments cyclic over warps, lane k takes element k */",
            "            barrier(CLK_LOCAL_MEM_FENCE);",
            "            {",
            "                const int lin = wi_y * WG_W + wi_x;",
            "                const int w = lin / WARP_SIZE;",
            "                const int lane = lin % WARP_SIZE;",
            "                for (int seg = w; seg < NUM_SEGS; seg += NUM_WARPS) {",
            "                    const int seg_row = seg / SEGS_PER_ROW;",
            "                    const int seg_col = (seg % SEGS_PER_ROW) * SEG_ELEMS;",
            "                    for (int e = lane; e < SEG_ELEMS; e += LANES_PER_WARP) {",
            "                        region[seg_row * R_COLS_PAD + seg_col + e] =",
            "                            IN_AT(org_row + seg_row, org_col + seg_col + e);",
            "                    }",
            "                }",
            "            }",
            "            barrier(CLK_LOCAL_MEM_FENCE);",
        ]
    body += [
        "            float acc = 0.0f;",
        "            for (int i = 0; i < N; ++i) {",
        "                for (int j = 0; j < M; ++j) {",
    ]
    body += _inner_body(params, variant, "                    ")
    body += [
        "                }",
        "            }",
    ]
    body += _epilogue(params, "            ")
    body += [
        "        }",
        "    }",
    ]
    if variant is Variant.OPTIMIZED:
        body.append("    #undef REGION_AT")
    body.append("}")

    text = "\n".join(head + body) + "\n"
    return KernelSource(variant=variant, entry_name=entry, source_text=text, compile_defines=defines)


def emit_baseline(instance: KernelInstance, dev: DeviceDescriptor = DEFAULT_DEVICE) -> KernelSource:
    """Emit the unoptimized variant. Raises InvalidInstance on constraint
    violations."""
    geo = emit_geometry(instance, dev)
    return _emit(instance, Variant.BASELINE, geo, dev)


def emit_optimized(
    instance: KernelInstance, fp: Footprint | None = None, dev: DeviceDescriptor = DEFAULT_DEVICE
) -> KernelSource:
    """Emit the local-memory variant sized for staging region `fp` (computed
    from the instance when omitted). Raises OptimizationInfeasible when the
    region exceeds local-memory capacity, InvalidInstance on bad instances."""
    if fp is None:
        fp = footprint(instance, dev)
    if fp.bytes > dev.lmem_capacity_bytes:
        raise OptimizationInfeasible(fp.bytes, dev.lmem_capacity_bytes)
    geo = emit_geometry(instance, dev, fp)
    return _emit(instance, Variant.OPTIMIZED, geo, dev)


def defines_manifest(source: KernelSource) -> str:
    """Sidecar manifest: one -D binding per line."""
    return "".join(f"-D {name}={value}\n" for name, value in source.compile_defines)
