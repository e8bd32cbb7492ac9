"""Domain types and index arithmetic for the synthetic 2D kernel template.

A kernel instance pairs template parameters (home access pattern, loop trip
counts, stencil, contextual access counts) with a 2D launch configuration.
Work units are distributed blocked across workgroups and cyclically across
workitems inside a workgroup. Everything here is pure integer arithmetic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class HomeAccessPattern(enum.Enum):
    """The seven ways a work unit's inner loops map to target-array coordinates."""

    XY_REUSE = "xy_reuse"
    X_REUSE_ROW = "x_reuse_row"
    X_REUSE_COL = "x_reuse_col"
    Y_REUSE_ROW = "y_reuse_row"
    Y_REUSE_COL = "y_reuse_col"
    NO_REUSE_ROW_MAJOR = "no_reuse_row_major"
    NO_REUSE_COL_MAJOR = "no_reuse_col_major"


class StencilShape(enum.Enum):
    RECTANGULAR = "rect"
    DIAMOND = "diamond"
    STAR = "star"


@dataclass(frozen=True)
class StencilPattern:
    """A neighborhood shape around the home coordinate. Radius 0 collapses
    every shape to the single home point."""

    shape: StencilShape
    radius: int

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"stencil radius {self.radius} < 0")


@dataclass(frozen=True)
class Coord:
    """(row, col) pair. For work-unit coordinates, row is wu_y and col is wu_x."""

    row: int
    col: int


@dataclass(frozen=True)
class TemplateParams:
    """Compile-time parameters of one synthetic kernel."""

    in_h: int
    in_w: int
    out_h: int
    out_w: int
    pattern: HomeAccessPattern
    n: int
    m: int
    stencil: StencilPattern
    num_comp_ilb: int
    num_comp_ep: int
    num_coal_ilb: int
    num_coal_ep: int
    num_uncoal_ilb: int
    num_uncoal_ep: int


@dataclass(frozen=True)
class LaunchConfig:
    """2D launch geometry. grid_* are total workitems per dimension; wg_* are
    workgroup dimensions in workitems."""

    grid_x: int
    grid_y: int
    wg_x: int
    wg_y: int

    @property
    def wg_size(self) -> int:
        return self.wg_x * self.wg_y

    @property
    def grid_size(self) -> int:
        return self.grid_x * self.grid_y


@dataclass(frozen=True)
class KernelInstance:
    params: TemplateParams
    launch: LaunchConfig

    @property
    def num_wus_x(self) -> int:
        return self.params.out_w // self.launch.grid_x

    @property
    def num_wus_y(self) -> int:
        return self.params.out_h // self.launch.grid_y

    @property
    def wus_per_workitem(self) -> int:
        return self.num_wus_x * self.num_wus_y


def is_power_of_two(v: int) -> bool:
    return v > 0 and (v & (v - 1)) == 0


def stencil_offsets(stencil: StencilPattern) -> list[tuple[int, int]]:
    """All (d_row, d_col) offsets of the stencil, in row-major order.

    Rectangular: full (2r+1)^2 box. Diamond: |dr|+|dc| <= r. Star: the two
    axis-aligned arms, 4r+1 points. Always contains (0, 0).
    """
    r = stencil.radius
    offs = []
    for dr in range(-r, r + 1):
        for dc in range(-r, r + 1):
            if stencil.shape is StencilShape.DIAMOND and abs(dr) + abs(dc) > r:
                continue
            if stencil.shape is StencilShape.STAR and dr != 0 and dc != 0:
                continue
            offs.append((dr, dc))
    return offs


def home_coordinate(
    pattern: HomeAccessPattern, wu: Coord, i: int, j: int, params: TemplateParams
) -> Coord:
    """Target-array coordinate of the home access for work unit `wu` at inner
    loop iteration (i, j). `wu.col` is wu_x, `wu.row` is wu_y."""
    n, m = params.n, params.m
    wu_x, wu_y = wu.col, wu.row
    p = HomeAccessPattern
    if pattern is p.XY_REUSE:
        return Coord(i, j)
    if pattern is p.X_REUSE_ROW:
        return Coord(wu_y, j)
    if pattern is p.X_REUSE_COL:
        return Coord(j, wu_y)
    if pattern is p.Y_REUSE_ROW:
        return Coord(wu_x, j)
    if pattern is p.Y_REUSE_COL:
        return Coord(j, wu_x)
    if pattern is p.NO_REUSE_ROW_MAJOR:
        return Coord(wu_y * n + i, wu_x * m + j)
    if pattern is p.NO_REUSE_COL_MAJOR:
        return Coord(wu_y * m + j, wu_x * n + i)
    raise ValueError(f"unknown pattern {pattern!r}")


def work_unit_for(
    launch: LaunchConfig, params: TemplateParams, wg: Coord, wi: Coord, it: Coord
) -> Coord:
    """Work unit assigned to workitem `wi` of workgroup `wg` at iteration `it`.

    Work units are blocked across workgroups (each workgroup owns a contiguous
    block) and cyclic across workitems (stride = workgroup dimension).
    """
    num_wus_x = params.out_w // launch.grid_x
    num_wus_y = params.out_h // launch.grid_y
    wu_x = wg.col * (launch.wg_x * num_wus_x) + it.col * launch.wg_x + wi.col
    wu_y = wg.row * (launch.wg_y * num_wus_y) + it.row * launch.wg_y + wi.row
    return Coord(row=wu_y, col=wu_x)


def validate_params(params: TemplateParams) -> list[str]:
    """Violation messages for the template parameters alone; empty means ok."""
    v = []
    for name in ("in_h", "in_w", "out_h", "out_w", "n", "m"):
        val = getattr(params, name)
        if val < 1:
            v.append(f"{name} {val} < 1")
    for name in (
        "num_comp_ilb",
        "num_comp_ep",
        "num_coal_ilb",
        "num_coal_ep",
        "num_uncoal_ilb",
        "num_uncoal_ep",
    ):
        val = getattr(params, name)
        if val < 0:
            v.append(f"{name} {val} < 0")
    if params.stencil.radius < 0:
        v.append(f"stencil radius {params.stencil.radius} < 0")
    return v


def validate_instance(instance: KernelInstance) -> list[str]:
    """All constraint violations of the instance; an empty list means valid.

    Violations are data, not faults: downstream passes decide what to do.
    """
    params, launch = instance.params, instance.launch
    v = validate_params(params)
    for name in ("grid_x", "grid_y", "wg_x", "wg_y"):
        val = getattr(launch, name)
        if not is_power_of_two(val):
            v.append(f"{name} {val} is not a power of two")
    if launch.wg_x > launch.grid_x:
        v.append(f"wg_x {launch.wg_x} > grid_x {launch.grid_x}")
    if launch.wg_y > launch.grid_y:
        v.append(f"wg_y {launch.wg_y} > grid_y {launch.grid_y}")
    if launch.wg_size > 1024:
        v.append(f"workgroup size {launch.wg_size} > 1024")
    if launch.grid_size < 512:
        v.append(f"grid size {launch.grid_size} < 512")
    if launch.grid_x > 0 and params.out_w % launch.grid_x != 0:
        v.append(f"grid_x {launch.grid_x} does not divide out_w {params.out_w}")
    if launch.grid_y > 0 and params.out_h % launch.grid_y != 0:
        v.append(f"grid_y {launch.grid_y} does not divide out_h {params.out_h}")
    return v
