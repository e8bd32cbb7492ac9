"""Command-line surface: gen, train, predict, report.

Exit codes: 0 success, 1 usage or configuration error, 2 data error (missing
or malformed files, invalid instances), 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

import numpy as np

from .access_analysis import FEATURE_NAMES, extract_features
from .codegen import Variant, defines_manifest, emit_baseline, emit_optimized, kernel_filename
from .config import RunConfig, load_config, parse_kv_text
from .dataset import LabeledInstance, build_dataset, read_rows, write_rows, write_skip_log
from .device import DeviceDescriptor
from .errors import (
    ConfigError,
    DatasetFormatError,
    InvalidInstance,
    LmtuneError,
    ModelFormatError,
    OptimizationInfeasible,
)
from .forest import load as load_model
from .forest import predict as forest_predict
from .forest import save as save_model
from .forest import train as train_forest
from .kernel_model import (
    HomeAccessPattern,
    KernelInstance,
    LaunchConfig,
    StencilPattern,
    StencilShape,
    TemplateParams,
    validate_instance,
)
from .metrics import EvalReport, evaluate, speedup_histogram
from .seeding import mix_seed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

_SPLIT_STREAM = 0x53504C49  # keeps the split RNG clear of the per-tree streams


def split_rows(rows, fraction: float, seed: int):
    """Seeded (train, held_out) partition; the train side gets
    round(fraction * n) rows clamped so both sides are non-empty."""
    n = len(rows)
    if n < 2:
        raise DatasetFormatError(f"need at least 2 rows to split, got {n}")
    size = max(1, min(n - 1, round(fraction * n)))
    perm = np.random.default_rng(mix_seed(seed, _SPLIT_STREAM)).permutation(n)
    train_idx = np.sort(perm[:size])
    held_idx = np.sort(perm[size:])
    return [rows[i] for i in train_idx], [rows[i] for i in held_idx]


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _emit_kernel_sources(rows: list[LabeledInstance], dev: DeviceDescriptor, root: str) -> int:
    """Write both source variants for every distinct kernel in the dataset,
    one numbered subdirectory per kernel (filenames only encode pattern, loop
    sizes and stencil, so different sampled tuples would collide in one flat
    directory). The optimized variant uses the kernel's first launch with a
    feasible footprint; a kernel with none gets only the baseline."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(row.instance.params, []).append(row)
    written = 0
    for k, (params, grp) in enumerate(groups.items()):
        d = os.path.join(root, f"k{k:05d}")
        os.makedirs(d, exist_ok=True)

        def put(src):
            name = kernel_filename(params, src.variant)
            _write_text(os.path.join(d, name), src.source_text)
            _write_text(os.path.join(d, name.removesuffix(".cl") + ".defines"), defines_manifest(src))

        put(emit_baseline(grp[0].instance, dev))
        written += 1
        feasible = next(
            (r for r in grp if r.features.lmem_bytes <= dev.lmem_capacity_bytes), None
        )
        if feasible is not None:
            put(emit_optimized(feasible.instance, dev=dev))
            written += 1
    return written


def _write_report(report: EvalReport, text_path, kv_path) -> None:
    body = (
        report.summary()
        + "\n"
        + f"confusion: optimize/optimize={report.true_optimize} "
        + f"optimize/leave={report.false_optimize} "
        + f"leave/leave={report.true_leave} "
        + f"leave/optimize={report.false_leave}\n"
    )
    _write_text(text_path, body)
    _write_text(kv_path, report.as_kv())


def _write_histogram(path, hist) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("bucket_low", "bucket_high", "count"))
        for lo, hi, count in hist:
            w.writerow((repr(lo), repr(hi), str(count)))


def cmd_gen(args) -> int:
    cfg = load_config(args.config)
    sampling = cfg.sampling
    if args.seed is not None:
        sampling = replace(sampling, seed=args.seed)
    if args.max_instances is not None:
        sampling = replace(sampling, max_instances=args.max_instances)
    out_path = args.out or cfg.paths.dataset
    result = build_dataset(sampling, cfg.device, threads=args.threads)
    write_rows(out_path, result.rows)
    write_skip_log(cfg.paths.skip_log, result.skips)
    print(f"wrote {len(result.rows)} rows to {out_path} ({len(result.skips)} skipped)")
    if args.emit_kernels:
        n = _emit_kernel_sources(result.rows, cfg.device, cfg.paths.kernels_dir)
        print(f"emitted {n} kernel sources under {cfg.paths.kernels_dir}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    hp = cfg.forest
    if args.seed is not None:
        hp = replace(hp, seed=args.seed)
    fraction = cfg.train_fraction if args.train_fraction is None else args.train_fraction
    if not (0.0 < fraction < 1.0):
        raise ConfigError(f"train_fraction {fraction} outside (0, 1)")
    rows = read_rows(args.dataset or cfg.paths.dataset)
    train_rows, held_rows = split_rows(rows, fraction, hp.seed)
    if len({r.beneficial for r in train_rows}) == 1:
        print("warning: training split is single-class; the model will rarely disagree", file=sys.stderr)

    forest = train_forest(train_rows, hp, threads=args.threads)
    model_path = args.out or cfg.paths.model
    save_model(forest, model_path)

    X = np.stack([r.features.to_array() for r in held_rows])
    speedups = np.array([r.speedup for r in held_rows], dtype=np.float64)
    report = evaluate(forest_predict(forest, X) > 1.0, speedups)
    _write_report(report, cfg.paths.report, cfg.paths.report_kv)
    print(f"model written to {model_path} ({len(train_rows)} training rows)")
    print(f"held-out {report.summary()}")
    return EXIT_OK


_INSTANCE_REQUIRED = (
    "pattern",
    "stencil_shape",
    "stencil_radius",
    "n",
    "m",
    "grid_x",
    "grid_y",
    "wg_x",
    "wg_y",
)
_INSTANCE_DEFAULTS = {
    "in_h": 2048,
    "in_w": 2048,
    "out_h": 2048,
    "out_w": 2048,
    "num_comp_ilb": 0,
    "num_comp_ep": 0,
    "num_coal_ilb": 0,
    "num_coal_ep": 0,
    "num_uncoal_ilb": 0,
    "num_uncoal_ep": 0,
}


def parse_instance_text(text: str) -> KernelInstance:
    """Instance description as key=value lines; geometry defaults to the
    2048x2048 arrays and contextual/compute counts to zero."""
    try:
        pairs = parse_kv_text(text)
    except ConfigError as exc:
        raise DatasetFormatError(str(exc)) from None
    known = set(_INSTANCE_REQUIRED) | set(_INSTANCE_DEFAULTS)
    for key in pairs:
        if key not in known:
            raise DatasetFormatError(f"unknown instance key {key!r}")
    missing = [k for k in _INSTANCE_REQUIRED if k not in pairs]
    if missing:
        raise DatasetFormatError(f"missing instance keys: {', '.join(missing)}")

    def geti(key: str) -> int:
        raw = pairs.get(key)
        if raw is None:
            return _INSTANCE_DEFAULTS[key]
        try:
            return int(raw)
        except ValueError:
            raise DatasetFormatError(f"{key}: invalid integer {raw!r}") from None

    try:
        pattern = HomeAccessPattern(pairs["pattern"])
    except ValueError:
        raise DatasetFormatError(f"pattern: unknown value {pairs['pattern']!r}") from None
    try:
        shape = StencilShape(pairs["stencil_shape"])
    except ValueError:
        raise DatasetFormatError(f"stencil_shape: unknown value {pairs['stencil_shape']!r}") from None
    radius = geti("stencil_radius")
    if radius < 0:
        raise DatasetFormatError(f"stencil_radius {radius} < 0")

    params = TemplateParams(
        in_h=geti("in_h"),
        in_w=geti("in_w"),
        out_h=geti("out_h"),
        out_w=geti("out_w"),
        pattern=pattern,
        n=geti("n"),
        m=geti("m"),
        stencil=StencilPattern(shape, radius),
        num_comp_ilb=geti("num_comp_ilb"),
        num_comp_ep=geti("num_comp_ep"),
        num_coal_ilb=geti("num_coal_ilb"),
        num_coal_ep=geti("num_coal_ep"),
        num_uncoal_ilb=geti("num_uncoal_ilb"),
        num_uncoal_ep=geti("num_uncoal_ep"),
    )
    launch = LaunchConfig(geti("grid_x"), geti("grid_y"), geti("wg_x"), geti("wg_y"))
    return KernelInstance(params, launch)


def cmd_predict(args) -> int:
    cfg = load_config(args.config)
    forest = load_model(args.model or cfg.paths.model)
    with open(args.instance, "r", encoding="utf-8") as fh:
        instance = parse_instance_text(fh.read())
    violations = validate_instance(instance)
    if violations:
        raise InvalidInstance(violations)

    fv = extract_features(instance, cfg.device)
    pred = forest_predict(forest, fv)
    print(f"predicted_speedup={pred!r}")
    if fv.lmem_bytes > cfg.device.lmem_capacity_bytes:
        print(
            "decision=DO-NOT-OPTIMIZE "
            f"(local-memory footprint {int(fv.lmem_bytes)} bytes exceeds "
            f"capacity {cfg.device.lmem_capacity_bytes})"
        )
    elif pred > 1.0:
        print("decision=OPTIMIZE")
    else:
        print("decision=DO-NOT-OPTIMIZE")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = load_config(args.config)
    rows = read_rows(args.dataset or cfg.paths.dataset)
    if not rows:
        raise DatasetFormatError("dataset has no rows")
    forest = load_model(args.model or cfg.paths.model)
    if tuple(forest.feature_names) != FEATURE_NAMES:
        raise ModelFormatError(
            f"model feature schema {forest.feature_names} does not match the dataset schema"
        )
    X = np.stack([r.features.to_array() for r in rows])
    speedups = np.array([r.speedup for r in rows], dtype=np.float64)
    report = evaluate(forest_predict(forest, X) > 1.0, speedups)
    _write_report(report, args.out or cfg.paths.report, cfg.paths.report_kv)
    _write_histogram(cfg.paths.histogram, speedup_histogram(speedups))
    print(report.summary())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lmtune",
        description="Local-memory auto-tuning pipeline: generate labeled synthetic "
        "kernels, train a decision model, and apply it.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate and label the synthetic dataset")
    g.add_argument("--config", help="key=value config file")
    g.add_argument("--seed", type=int, help="override sampling.seed")
    g.add_argument("--max-instances", type=int, help="override sampling.max_instances")
    g.add_argument("--out", help="dataset output path (default paths.dataset)")
    g.add_argument("--emit-kernels", action="store_true", help="also write kernel sources")
    g.add_argument("--threads", type=int, default=1, help="labeling worker threads")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train the forest and score the held-out rows")
    t.add_argument("--config", help="key=value config file")
    t.add_argument("--seed", type=int, help="override forest.seed")
    t.add_argument("--train-fraction", type=float, help="override train_fraction")
    t.add_argument("--dataset", help="dataset path (default paths.dataset)")
    t.add_argument("--out", help="model output path (default paths.model)")
    t.add_argument("--threads", type=int, default=1, help="tree-building worker threads")
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", help="decide one instance described as key=value text")
    pr.add_argument("instance", help="instance description file")
    pr.add_argument("--config", help="key=value config file")
    pr.add_argument("--model", help="model path (default paths.model)")
    pr.set_defaults(func=cmd_predict)

    rp = sub.add_parser("report", help="score a model against a labeled dataset")
    rp.add_argument("--config", help="key=value config file")
    rp.add_argument("--dataset", help="dataset path (default paths.dataset)")
    rp.add_argument("--model", help="model path (default paths.model)")
    rp.add_argument("--out", help="report text path (default paths.report)")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        DatasetFormatError,
        ModelFormatError,
        InvalidInstance,
        OptimizationInfeasible,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except LmtuneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
