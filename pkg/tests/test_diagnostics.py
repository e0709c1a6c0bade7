import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from srpca.core import CompletionConfig, IterationTrace, Termination, srpca_complete
from srpca.diagnostics import (
    MetricReport,
    full_error,
    metric_report,
    nmae,
    observed_residual,
    verify_trace,
)
from srpca.errors import InvalidArgumentError
from srpca.observation import ObservedMatrix

from synth import masked_lowrank

grids = hnp.arrays(np.float64, (5, 4), elements=st.floats(-100, 100))


class TestObservedResidual:
    def test_exact_fit(self):
        _, x = masked_lowrank(6, 5, 2, 0.3, 0)
        assert observed_residual(x, x.values) == 0.0

    def test_single_entry(self):
        x = ObservedMatrix(np.zeros((2, 2)), np.array([[True, False], [False, False]]))
        assert observed_residual(x, np.array([[3.0, 50.0], [50.0, 50.0]])) == 9.0

    def test_double_loop_oracle(self):
        rng = np.random.default_rng(4)
        x = ObservedMatrix(rng.standard_normal((10, 10)), rng.random((10, 10)) < 0.5)
        m = rng.standard_normal((10, 10))
        ref = 0.0
        for i in range(10):
            for j in range(10):
                if x.mask[i, j]:
                    ref += (m[i, j] - x.values[i, j]) ** 2
        assert observed_residual(x, m) == pytest.approx(ref, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            observed_residual(ObservedMatrix.full(np.ones((2, 2))), np.ones((3, 2)))

    @given(grids, grids, hnp.arrays(np.bool_, (5, 4)))
    def test_partial_sum(self, truth, m, mask):
        assert observed_residual(ObservedMatrix(truth, mask), m) <= full_error(truth, m) + 1e-9


class TestNmae:
    def test_perfect(self):
        x = ObservedMatrix.full(np.array([[1.0, 5.0]]))
        assert nmae(x.values, x, 1.0, 5.0) == 0.0

    def test_off_by_range(self):
        x = ObservedMatrix.full(np.array([[1.0, 2.0]]))
        assert nmae(x.values + 4.0, x, 1.0, 5.0) == 1.0

    def test_arithmetic_oracle(self):
        holdout = ObservedMatrix.full(np.array([[4.0, 4.0]]))
        assert nmae(np.array([[3.0, 4.0]]), holdout, 1.0, 5.0) == 0.125

    def test_only_holdout_cells_scored(self):
        holdout = ObservedMatrix(np.array([[4.0, 0.0]]), np.array([[True, False]]))
        assert nmae(np.array([[4.0, 99.0]]), holdout, 1.0, 5.0) == 0.0

    def test_clip_flag(self):
        holdout = ObservedMatrix.full(np.array([[5.0]]))
        assert nmae(np.array([[7.0]]), holdout, 1.0, 5.0) == 0.5
        assert nmae(np.array([[7.0]]), holdout, 1.0, 5.0, clip=True) == 0.0

    @pytest.mark.parametrize("lo, hi", [(5.0, 5.0), (5.0, 1.0)])
    def test_bad_range(self, lo, hi):
        with pytest.raises(InvalidArgumentError):
            nmae(np.zeros((1, 1)), ObservedMatrix.full(np.zeros((1, 1))), lo, hi)

    def test_empty_holdout(self):
        with pytest.raises(InvalidArgumentError):
            nmae(np.zeros((1, 1)), ObservedMatrix(np.zeros((1, 1)), np.zeros((1, 1), bool)), 0.0, 1.0)

    @given(grids, grids, st.floats(-1e3, 1e3))
    def test_shift_invariant(self, pred, truth, shift):
        holdout = ObservedMatrix.full(truth)
        a = nmae(pred, holdout, -100.0, 100.0)
        b = nmae(pred + shift, ObservedMatrix.full(truth + shift), -100.0 + shift, 100.0 + shift)
        assert a >= 0
        assert b == pytest.approx(a, rel=1e-6, abs=1e-9)


class TestVerifyTrace:
    def test_clean(self):
        t = IterationTrace(residuals=[4.0, 2.0, 1.0, 0.95], termination=Termination.CONVERGED)
        assert verify_trace(t, 0.1, 41) == []

    def test_increase(self):
        t = IterationTrace(residuals=[4.0, 5.0], termination=Termination.CONVERGED)
        found = verify_trace(t, 0.1, 100)
        assert len(found) == 1
        assert found[0].iteration == 1 and found[0].quantity == "monotonicity"

    def test_slow_progress(self):
        t = IterationTrace(residuals=[4.0, 3.99, 1.0, 0.99], termination=Termination.CONVERGED)
        assert [v.quantity for v in verify_trace(t, 0.1, 100)] == ["progress"]

    def test_bound(self):
        t = IterationTrace(residuals=[1.0, 0.5, 0.45], termination=Termination.CONVERGED)
        assert [v.quantity for v in verify_trace(t, 0.1, 2)] == ["iteration bound"]
        t.termination = Termination.MAX_ITER
        assert verify_trace(t, 0.1, 2) == []

    def test_empty(self):
        with pytest.raises(InvalidArgumentError):
            verify_trace(IterationTrace(), 0.1)

    @pytest.mark.parametrize("seed", range(5))
    def test_seeded_run_clean(self, seed):
        _, x = masked_lowrank(30, 25, 2, 0.5, seed)
        trace = srpca_complete(x, CompletionConfig(rank=2, seed=seed)).trace
        assert verify_trace(trace, 1e-4) == []


def test_metric_report():
    truth, x = masked_lowrank(30, 20, 2, 0.5, 1)
    res = srpca_complete(x, CompletionConfig(rank=2, tol=1e-8, standardize=False))
    holdout = ObservedMatrix(truth, ~x.mask)
    rep = metric_report(x, res, 1e-8, truth=truth, holdout=holdout)
    assert rep.observed_sq_residual <= rep.full_sq_error
    assert rep.full_sq_error == rep.full_sq_error_std
    assert rep.iterations < rep.bound
    assert rep.nmae >= 0
    assert MetricReport.from_dict(rep.to_dict()) == rep
