import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lmtune.dataset import SamplingSpec, build_dataset


@pytest.fixture(scope="session")
def default_dataset():
    """The full default-scale dataset (50,000 rows, seed 0). Built once;
    shared by the protocol-reproduction and breadth checks."""
    result = build_dataset(SamplingSpec(), threads=8)
    assert not result.skips, f"default build skipped instances: {result.skips[:3]}"
    return result.rows


def small_instance_pool(seed=0, count=None):
    """Convenience for tests that want a handful of diverse valid instances."""
    import numpy as np

    from lmtune.kernel_model import (
        HomeAccessPattern,
        KernelInstance,
        LaunchConfig,
        StencilPattern,
        StencilShape,
        TemplateParams,
    )

    rng = np.random.default_rng(seed)
    pats = list(HomeAccessPattern)
    shapes = list(StencilShape)
    launches = [
        LaunchConfig(512, 512, 8, 8),
        LaunchConfig(512, 512, 32, 4),
        LaunchConfig(512, 512, 16, 16),
        LaunchConfig(1024, 256, 64, 2),
        LaunchConfig(256, 2048, 4, 64),
    ]
    pool = []
    total = count if count is not None else 64
    for _ in range(total):
        p = TemplateParams(
            in_h=2048,
            in_w=2048,
            out_h=2048,
            out_w=2048,
            pattern=pats[rng.integers(len(pats))],
            n=int(2 ** rng.integers(0, 4)),
            m=int(2 ** rng.integers(0, 4)),
            stencil=StencilPattern(shapes[rng.integers(len(shapes))], int(rng.integers(0, 3))),
            num_comp_ilb=int(rng.integers(5, 45)),
            num_comp_ep=int(rng.integers(1, 49)),
            num_coal_ilb=int(rng.integers(0, 14)),
            num_coal_ep=int(rng.integers(0, 14)),
            num_uncoal_ilb=int(rng.integers(0, 5)),
            num_uncoal_ep=int(rng.integers(0, 5)),
        )
        pool.append(KernelInstance(p, launches[rng.integers(len(launches))]))
    return pool
