"""Reference interpreter: input generation and baseline/optimized agreement."""

import numpy as np

from lmtune.codegen import Variant
from lmtune.interp import execute, make_inputs, run_pair
from lmtune.kernel_model import (
    HomeAccessPattern,
    KernelInstance,
    LaunchConfig,
    StencilPattern,
    StencilShape,
    TemplateParams,
    validate_instance,
)

P = HomeAccessPattern


def small(pattern=P.XY_REUSE, n=2, m=2, shape=StencilShape.RECTANGULAR, radius=1,
          out=32, grid=32, wg=(8, 8), **counts):
    base = dict(num_comp_ilb=3, num_comp_ep=2, num_coal_ilb=1, num_coal_ep=1,
                num_uncoal_ilb=1, num_uncoal_ep=1)
    base.update(counts)
    params = TemplateParams(in_h=64, in_w=64, out_h=out, out_w=out,
                            pattern=pattern, n=n, m=m,
                            stencil=StencilPattern(shape, radius), **base)
    return KernelInstance(params, LaunchConfig(grid, grid, wg[0], wg[1]))


class TestMakeInputs:
    def test_hash_fill_recurrence(self):
        k = small(P.NO_REUSE_ROW_MAJOR)
        in_arr, in2 = make_inputs(k)

        def expected(i, salt):
            return np.float32(((i + salt) * 2654435761 % 2**32) / 2**32 - 0.5)

        flat = in_arr.ravel()
        for i in (0, 1, 7, 100, flat.size - 1):
            assert flat[i] == expected(i, 0)
        flat2 = in2.ravel()
        for i in (0, 1, 999):
            assert flat2[i] == expected(i, 1)
        assert flat[0] == np.float32(-0.5)

    def test_shapes_and_dtype(self):
        # no-reuse walks the whole out-sized region, plus apron margins
        k = small(P.NO_REUSE_ROW_MAJOR, radius=2)
        in_arr, in2 = make_inputs(k)
        assert in2.shape == (64, 64)
        assert in_arr.dtype == in2.dtype == np.float32
        assert in_arr.shape[0] >= 64 + 4 and in_arr.shape[1] >= 64 + 4

    def test_shared_region_allocates_only_the_region(self):
        # every work unit of XY reuse touches the same (n+2r)x(m+2r) cells
        in_arr, _ = make_inputs(small(P.XY_REUSE, n=2, m=2, radius=1))
        assert in_arr.shape == (4, 4)

    def test_deterministic(self):
        a1, b1 = make_inputs(small())
        a2, b2 = make_inputs(small())
        assert np.array_equal(a1, a2) and np.array_equal(b1, b2)

    def test_inputs_differ_between_arrays(self):
        in_arr, in2 = make_inputs(small())
        assert in_arr[0, 0] != in2[0, 0]


class TestVariantAgreement:
    def test_every_pattern_and_radius(self):
        for pattern in P:
            for radius in (0, 1, 2):
                k = small(pattern, radius=radius)
                assert validate_instance(k) == []
                base, opt = run_pair(k)
                assert not np.isnan(base).any()
                assert np.array_equal(base, opt), (pattern, radius)

    def test_stencil_shapes(self):
        for shape in StencilShape:
            base, opt = run_pair(small(shape=shape, radius=2))
            assert np.array_equal(base, opt)

    def test_multiple_work_unit_iterations(self):
        # out 64, grid 32: each workitem owns 4 work units
        for pattern in (P.XY_REUSE, P.Y_REUSE_COL, P.NO_REUSE_ROW_MAJOR):
            k = small(pattern, out=64, grid=32)
            assert k.wus_per_workitem == 4
            base, opt = run_pair(k)
            assert not np.isnan(base).any()
            assert np.array_equal(base, opt)

    def test_wide_and_tall_workgroups(self):
        for wg in ((32, 1), (1, 32), (16, 2), (4, 8)):
            k = small(P.X_REUSE_COL, wg=wg)
            base, opt = run_pair(k)
            assert np.array_equal(base, opt)

    def test_asymmetric_loops(self):
        for n, m in ((1, 8), (8, 1), (4, 2)):
            base, opt = run_pair(small(P.XY_REUSE, n=n, m=m))
            assert np.array_equal(base, opt)

    def test_pure_stencil_no_context(self):
        k = small(num_comp_ilb=0, num_comp_ep=0, num_coal_ilb=0, num_coal_ep=0,
                  num_uncoal_ilb=0, num_uncoal_ep=0)
        base, opt = run_pair(k)
        assert np.array_equal(base, opt)


class TestExecute:
    def test_covers_output_exactly(self):
        k = small()
        in_arr, in2 = make_inputs(k)
        out = execute(k, Variant.BASELINE, in_arr, in2)
        assert out.shape == (32, 32)
        assert out.dtype == np.float32
        assert not np.isnan(out).any()

    def test_output_depends_on_every_operation_class(self):
        # inputs sized for the largest apron work for every tweak below
        in_arr, in2 = make_inputs(small(radius=2))
        ref = execute(small(), Variant.BASELINE, in_arr, in2)
        for tweak in ({"num_comp_ilb": 4}, {"num_comp_ep": 3}, {"num_coal_ilb": 2},
                      {"num_uncoal_ep": 2}, {"radius": 2}):
            other = execute(small(**tweak), Variant.BASELINE, in_arr, in2)
            assert not np.array_equal(ref, other), tweak

    def test_deterministic_across_runs(self):
        k = small(P.NO_REUSE_COL_MAJOR)
        in_arr, in2 = make_inputs(k)
        o1 = execute(k, Variant.OPTIMIZED, in_arr, in2)
        o2 = execute(k, Variant.OPTIMIZED, in_arr, in2)
        assert np.array_equal(o1, o2)
