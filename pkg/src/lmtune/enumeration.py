"""Brute-force address enumeration over one workgroup.

Slow, obviously-correct twins of the closed-form analyses in
`access_analysis`: walk every (workitem, i, j) of a workgroup through
`home_coordinate` and aggregate. Tests hold the two routes exactly equal;
production code never calls these.
"""

from __future__ import annotations

from .device import DEFAULT_DEVICE, DeviceDescriptor
from .access_analysis import Footprint, pad_col_span
from .kernel_model import (
    Coord,
    KernelInstance,
    home_coordinate,
    stencil_offsets,
    work_unit_for,
)

_ORIGIN = Coord(0, 0)


def _home_accesses(instance: KernelInstance):
    """Yield (lane, home) for every workitem and (i, j) of workgroup (0, 0)
    at work-unit iteration (0, 0)."""
    params, launch = instance.params, instance.launch
    for wi_y in range(launch.wg_y):
        for wi_x in range(launch.wg_x):
            lane = wi_x + wi_y * launch.wg_x
            wu = work_unit_for(launch, params, _ORIGIN, Coord(wi_y, wi_x), _ORIGIN)
            for i in range(params.n):
                for j in range(params.m):
                    yield lane, home_coordinate(params.pattern, wu, i, j, params)


def reuse_degree_enum(instance: KernelInstance) -> float:
    touched: dict[tuple[int, int], set[int]] = {}
    accesses = []
    for lane, home in _home_accesses(instance):
        key = (home.row, home.col)
        touched.setdefault(key, set()).add(lane)
        accesses.append(key)
    return sum(len(touched[key]) for key in accesses) / len(accesses)


def coalescing_degree_enum(
    instance: KernelInstance, dev: DeviceDescriptor = DEFAULT_DEVICE
) -> float:
    params, launch = instance.params, instance.launch
    warp = dev.warp_size
    nwarps = (launch.wg_size + warp - 1) // warp
    # segments[(warp, i, j)] = set of transaction indices
    segments: dict[tuple[int, int, int], set[int]] = {}
    for wi_y in range(launch.wg_y):
        for wi_x in range(launch.wg_x):
            lane = wi_x + wi_y * launch.wg_x
            wu = work_unit_for(launch, params, _ORIGIN, Coord(wi_y, wi_x), _ORIGIN)
            for i in range(params.n):
                for j in range(params.m):
                    home = home_coordinate(params.pattern, wu, i, j, params)
                    addr = (home.row * params.in_w + home.col) * dev.element_bytes
                    segments.setdefault((lane // warp, i, j), set()).add(
                        addr // dev.transaction_bytes
                    )
    total = sum(len(s) for s in segments.values())
    return total / (nwarps * params.n * params.m)


def footprint_enum(instance: KernelInstance, dev: DeviceDescriptor = DEFAULT_DEVICE) -> Footprint:
    rows = []
    cols = []
    for _, home in _home_accesses(instance):
        rows.append(home.row)
        cols.append(home.col)
    offs = stencil_offsets(instance.params.stencil)
    row_span = (max(rows) + max(dr for dr, _ in offs)) - (min(rows) + min(dr for dr, _ in offs)) + 1
    col_span = (max(cols) + max(dc for _, dc in offs)) - (min(cols) + min(dc for _, dc in offs)) + 1
    padded = pad_col_span(col_span, dev)
    return Footprint(row_span, col_span, padded, row_span * padded * dev.element_bytes)
