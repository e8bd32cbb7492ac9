"""Synthetic-kernel dataset construction.

Samples compile-time parameter tuples, expands each across all seven home
access patterns and their loop-size value sets, sweeps valid launch
configurations, labels every instance with the cost model, and persists rows
as CSV. The whole pipeline is a pure function of (spec, device): given the
same seed it produces bit-identical files regardless of worker thread count.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .access_analysis import FEATURE_NAMES, FeatureVector, extract_features
from .cost_model import label_speedup
from .device import DEFAULT_DEVICE, DeviceDescriptor
from .errors import DatasetFormatError
from .kernel_model import (
    HomeAccessPattern,
    KernelInstance,
    LaunchConfig,
    StencilPattern,
    StencilShape,
    TemplateParams,
)
from .seeding import mix_seed

# patterns whose home coordinate walks with i get the large N set; those
# walking with j get the large M set (the rest stay small so inner loops
# exist but the walked extent is what varies)
_LARGE_N = frozenset(
    {HomeAccessPattern.XY_REUSE, HomeAccessPattern.X_REUSE_ROW, HomeAccessPattern.Y_REUSE_ROW}
)
_LARGE_M = frozenset(
    {HomeAccessPattern.XY_REUSE, HomeAccessPattern.X_REUSE_COL, HomeAccessPattern.Y_REUSE_COL}
)


@dataclass(frozen=True)
class SamplingSpec:
    """Ranges and scale knobs for dataset generation. All integer ranges are
    inclusive on both ends and sampled uniformly."""

    num_tuples: int = 100
    radius_range: tuple[int, int] = (0, 2)
    comp_ilb_range: tuple[int, int] = (5, 44)
    comp_ep_range: tuple[int, int] = (1, 48)
    coal_range: tuple[int, int] = (0, 13)
    uncoal_range: tuple[int, int] = (0, 4)
    large_values: tuple[int, ...] = (8, 16, 32, 64)
    small_values: tuple[int, ...] = (1, 2, 4, 8)
    in_h: int = 2048
    in_w: int = 2048
    out_h: int = 2048
    out_w: int = 2048
    max_instances: int = 50_000
    seed: int = 0

    def __post_init__(self):
        if self.num_tuples < 1:
            raise ValueError(f"num_tuples {self.num_tuples} < 1")
        if self.max_instances < 1:
            raise ValueError(f"max_instances {self.max_instances} < 1")
        for name in ("radius_range", "comp_ilb_range", "comp_ep_range", "coal_range", "uncoal_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} ({lo}, {hi}) is empty")
        if not self.large_values or not self.small_values:
            raise ValueError("value sets must be non-empty")

    def n_values(self, pattern: HomeAccessPattern) -> tuple[int, ...]:
        return self.large_values if pattern in _LARGE_N else self.small_values

    def m_values(self, pattern: HomeAccessPattern) -> tuple[int, ...]:
        return self.large_values if pattern in _LARGE_M else self.small_values


@dataclass(frozen=True)
class CompileTuple:
    """One sampled setting of every compile-time parameter except the home
    access pattern and the loop sizes."""

    stencil: StencilPattern
    num_comp_ilb: int
    num_comp_ep: int
    num_coal_ilb: int
    num_coal_ep: int
    num_uncoal_ilb: int
    num_uncoal_ep: int


@dataclass(frozen=True)
class LabeledInstance:
    instance: KernelInstance
    features: FeatureVector
    speedup: float
    beneficial: bool

    def __post_init__(self):
        if self.beneficial != (self.speedup > 1.0):
            raise ValueError(f"beneficial={self.beneficial} inconsistent with speedup {self.speedup}")


def sample_compile_tuples(spec: SamplingSpec) -> list[CompileTuple]:
    """Draw num_tuples settings, each field uniform over its range and the
    stencil shape uniform over all three. Draw order is fixed (shape, radius,
    then the six counts) so results are stable across versions."""
    rng = np.random.default_rng(spec.seed)
    shapes = list(StencilShape)

    def draw(rg: tuple[int, int]) -> int:
        return int(rng.integers(rg[0], rg[1] + 1))

    out = []
    for _ in range(spec.num_tuples):
        shape = shapes[int(rng.integers(0, len(shapes)))]
        stencil = StencilPattern(shape, draw(spec.radius_range))
        out.append(
            CompileTuple(
                stencil=stencil,
                num_comp_ilb=draw(spec.comp_ilb_range),
                num_comp_ep=draw(spec.comp_ep_range),
                num_coal_ilb=draw(spec.coal_range),
                num_coal_ep=draw(spec.coal_range),
                num_uncoal_ilb=draw(spec.uncoal_range),
                num_uncoal_ep=draw(spec.uncoal_range),
            )
        )
    return out


def expand_patterns(tup: CompileTuple, spec: SamplingSpec) -> list[TemplateParams]:
    """All pattern/N/M combinations of one tuple: 7 patterns x 4 x 4 = 112."""
    out = []
    for pattern in HomeAccessPattern:
        for n in spec.n_values(pattern):
            for m in spec.m_values(pattern):
                out.append(
                    TemplateParams(
                        in_h=spec.in_h,
                        in_w=spec.in_w,
                        out_h=spec.out_h,
                        out_w=spec.out_w,
                        pattern=pattern,
                        n=n,
                        m=m,
                        stencil=tup.stencil,
                        num_comp_ilb=tup.num_comp_ilb,
                        num_comp_ep=tup.num_comp_ep,
                        num_coal_ilb=tup.num_coal_ilb,
                        num_coal_ep=tup.num_coal_ep,
                        num_uncoal_ilb=tup.num_uncoal_ilb,
                        num_uncoal_ep=tup.num_uncoal_ep,
                    )
                )
    return out


@lru_cache(maxsize=8)
def _launch_configs_for(out_h: int, out_w: int, min_grid_size: int, max_wg_size: int):
    def pows(limit: int, divides: int):
        return [1 << k for k in range(limit.bit_length()) if divides % (1 << k) == 0]

    configs = []
    for gx in pows(out_w, out_w):
        for gy in pows(out_h, out_h):
            if gx * gy < min_grid_size:
                continue
            for wx in pows(gx, gx):
                for wy in pows(gy, gy):
                    if wx * wy <= max_wg_size:
                        configs.append(LaunchConfig(gx, gy, wx, wy))
    return tuple(configs)


def enumerate_launch_configs(
    params: TemplateParams, min_grid_size: int = 512, max_wg_size: int = 1024
) -> list[LaunchConfig]:
    """Every launch satisfying the instance constraints: power-of-two dims,
    grid dividing the output, workgroup within the grid, total workgroup size
    at most max_wg_size, total grid size at least min_grid_size. Ordered by
    (grid_x, grid_y, wg_x, wg_y)."""
    return list(_launch_configs_for(params.out_h, params.out_w, min_grid_size, max_wg_size))


def instance_key(instance: KernelInstance) -> str:
    p, lc = instance.params, instance.launch
    return (
        f"{p.pattern.value} n={p.n} m={p.m} {p.stencil.shape.value} r={p.stencil.radius} "
        f"comp={p.num_comp_ilb}/{p.num_comp_ep} coal={p.num_coal_ilb}/{p.num_coal_ep} "
        f"uncoal={p.num_uncoal_ilb}/{p.num_uncoal_ep} "
        f"grid={lc.grid_x}x{lc.grid_y} wg={lc.wg_x}x{lc.wg_y}"
    )


@dataclass
class BuildResult:
    rows: list[LabeledInstance]
    skips: list[tuple[str, str]]  # (instance key, reason)


def _select_instances(spec: SamplingSpec) -> list[KernelInstance]:
    """Deterministic instance selection under the max_instances cap.

    Kernels (deduplicated parameter sets) are enumerated in sampling order.
    Each kernel gets an independent seeded shuffle of the launch sweep, and
    instances are taken round-robin across kernels so truncation thins every
    kernel evenly instead of dropping whole patterns."""
    kernels: list[TemplateParams] = []
    seen: set[TemplateParams] = set()
    for tup in sample_compile_tuples(spec):
        for params in expand_patterns(tup, spec):
            if params not in seen:
                seen.add(params)
                kernels.append(params)

    # out dims are uniform across kernels, so one sweep list serves all
    launches = enumerate_launch_configs(kernels[0]) if kernels else []
    lcount = len(launches)

    # smallest number of round-robin passes that can reach the cap
    rounds = 0
    reachable = 0
    while reachable < spec.max_instances and rounds < lcount:
        rounds += 1
        reachable = sum(min(lcount, rounds) for _ in kernels)

    picked: list[tuple[int, int]] = []
    samples = []
    for k in range(len(kernels)):
        rng = np.random.default_rng(mix_seed(spec.seed, k))
        samples.append(rng.choice(lcount, size=min(lcount, rounds), replace=False))
    count = 0
    for r in range(rounds):
        for k in range(len(kernels)):
            if r < samples[k].size:
                picked.append((k, int(samples[k][r])))
                count += 1
                if count == spec.max_instances:
                    break
        if count == spec.max_instances:
            break

    picked.sort()
    return [KernelInstance(kernels[k], launches[i]) for k, i in picked]


def build_dataset(
    spec: SamplingSpec, dev: DeviceDescriptor = DEFAULT_DEVICE, threads: int = 1
) -> BuildResult:
    """Label every selected instance with features and modeled speedup.

    Per-instance failures are collected with their reason instead of aborting
    the build or silently vanishing. Row order is the canonical instance-key
    order whatever the thread count.
    """
    instances = _select_instances(spec)

    def label(inst: KernelInstance):
        try:
            fv = extract_features(inst, dev)
            # reuse the already-computed coalescing degree instead of paying for it twice
            sp = label_speedup(inst, dev, coalescing_override=fv.noncoalescing_degree)
            return LabeledInstance(inst, fv, sp, sp > 1.0), None
        except Exception as exc:
            return None, (instance_key(inst), f"{type(exc).__name__}: {exc}")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(label, instances, chunksize=256))
    else:
        results = [label(inst) for inst in instances]

    rows = [row for row, _ in results if row is not None]
    skips = [skip for _, skip in results if skip is not None]
    return BuildResult(rows=rows, skips=skips)


KEY_COLUMNS = (
    "pattern",
    "stencil_shape",
    "stencil_radius",
    "n",
    "m",
    "in_h",
    "in_w",
    "out_h",
    "out_w",
    "num_comp_ilb",
    "num_comp_ep",
    "num_coal_ilb",
    "num_coal_ep",
    "num_uncoal_ilb",
    "num_uncoal_ep",
    "grid_x",
    "grid_y",
    "wg_x",
    "wg_y",
)

CSV_HEADER = KEY_COLUMNS + FEATURE_NAMES + ("speedup", "beneficial")


def _row_fields(row: LabeledInstance) -> list[str]:
    p, lc = row.instance.params, row.instance.launch
    key = [
        p.pattern.value,
        p.stencil.shape.value,
        str(p.stencil.radius),
        str(p.n),
        str(p.m),
        str(p.in_h),
        str(p.in_w),
        str(p.out_h),
        str(p.out_w),
        str(p.num_comp_ilb),
        str(p.num_comp_ep),
        str(p.num_coal_ilb),
        str(p.num_coal_ep),
        str(p.num_uncoal_ilb),
        str(p.num_uncoal_ep),
        str(lc.grid_x),
        str(lc.grid_y),
        str(lc.wg_x),
        str(lc.wg_y),
    ]
    feats = [repr(float(v)) for v in row.features.to_array()]
    return key + feats + [repr(float(row.speedup)), "1" if row.beneficial else "0"]


def write_rows(path, rows: list[LabeledInstance]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(_row_fields(row))


def _parse_row(fields: list[str]) -> LabeledInstance:
    it = iter(fields)

    def nxt():
        return next(it)

    pattern = HomeAccessPattern(nxt())
    shape = StencilShape(nxt())
    radius = int(nxt())
    n, m = int(nxt()), int(nxt())
    in_h, in_w, out_h, out_w = int(nxt()), int(nxt()), int(nxt()), int(nxt())
    counts = [int(nxt()) for _ in range(6)]
    launch = LaunchConfig(int(nxt()), int(nxt()), int(nxt()), int(nxt()))
    params = TemplateParams(
        in_h=in_h,
        in_w=in_w,
        out_h=out_h,
        out_w=out_w,
        pattern=pattern,
        n=n,
        m=m,
        stencil=StencilPattern(shape, radius),
        num_comp_ilb=counts[0],
        num_comp_ep=counts[1],
        num_coal_ilb=counts[2],
        num_coal_ep=counts[3],
        num_uncoal_ilb=counts[4],
        num_uncoal_ep=counts[5],
    )
    features = FeatureVector.from_array([float(nxt()) for _ in range(len(FEATURE_NAMES))])
    speedup = float(nxt())
    flag = nxt()
    if flag not in ("0", "1"):
        raise ValueError(f"beneficial flag {flag!r} is not 0 or 1")
    return LabeledInstance(KernelInstance(params, launch), features, speedup, flag == "1")


def read_rows(path) -> list[LabeledInstance]:
    """Parse a dataset file back into rows; any malformed content raises
    DatasetFormatError naming the offending line."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError("line 1: missing header") from None
        if tuple(header) != CSV_HEADER:
            raise DatasetFormatError(f"line 1: header {header[:3]}... does not match schema")
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != len(CSV_HEADER):
                raise DatasetFormatError(
                    f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(fields)}"
                )
            try:
                rows.append(_parse_row(fields))
            except ValueError as exc:
                raise DatasetFormatError(f"line {lineno}: {exc}") from None
    return rows


def write_skip_log(path, skips: list[tuple[str, str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, reason in skips:
            fh.write(f"{key}\t{reason}\n")
