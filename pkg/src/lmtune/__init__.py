"""Local-memory auto-tuning toolkit for GPU-style kernels.

Generates parameterized 2D kernels (a plain variant and one that stages its
reused region in on-chip local memory), analyzes their access behavior,
labels the optimization's benefit with an analytical cost model, and trains
a random-forest regressor that decides when the optimization pays off.
"""

from .access_analysis import (
    FEATURE_NAMES,
    AffineAccess,
    FeatureVector,
    Footprint,
    coalescing_degree,
    extract_features,
    footprint,
    pattern_affine,
    reuse_degree,
)
from .codegen import (
    KernelSource,
    Variant,
    copy_transaction_count,
    defines_manifest,
    emit_baseline,
    emit_optimized,
    kernel_filename,
)
from .config import Paths, RunConfig, load_config
from .cost_model import (
    ResourceUsage,
    TimeEstimate,
    estimate_registers,
    kernel_time,
    label_speedup,
    occupancy,
    resource_usage,
)
from .dataset import (
    BuildResult,
    CompileTuple,
    LabeledInstance,
    SamplingSpec,
    build_dataset,
    enumerate_launch_configs,
    expand_patterns,
    read_rows,
    sample_compile_tuples,
    write_rows,
)
from .device import DEFAULT_DEVICE, DeviceDescriptor
from .errors import (
    ConfigError,
    DatasetFormatError,
    InvalidInstance,
    LmtuneError,
    ModelFormatError,
    OptimizationInfeasible,
)
from .forest import Forest, Hyperparams, decide, load, predict, save, train
from .interp import execute, make_inputs, run_pair
from .kernel_model import (
    Coord,
    HomeAccessPattern,
    KernelInstance,
    LaunchConfig,
    StencilPattern,
    StencilShape,
    TemplateParams,
    home_coordinate,
    stencil_offsets,
    validate_instance,
    validate_params,
    work_unit_for,
)
from .metrics import (
    EvalReport,
    count_accuracy,
    evaluate,
    penalty_weighted_accuracy,
    speedup_histogram,
)

__version__ = "0.1.0"
