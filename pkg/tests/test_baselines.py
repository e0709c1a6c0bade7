import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from srpca.baselines import AlsConfig, SvtConfig, als_complete, svt_complete, svt_threshold
from srpca.core import Termination
from srpca.errors import DivergenceError, InvalidArgumentError
from srpca.observation import ObservedMatrix, random_mask

from synth import masked_lowrank


class TestSvtThreshold:
    def test_diagonal(self):
        np.testing.assert_allclose(svt_threshold(np.diag([3.0, 1.0]), 2.0), np.diag([3.0, 0.0]), atol=1e-14)

    def test_above_top_singular_value(self):
        m = np.random.default_rng(0).standard_normal((4, 3))
        assert not svt_threshold(m, np.linalg.norm(m, 2) * 1.01).any()

    def test_dense_svd_oracle(self):
        # oracle: LAPACK gesvd (a different driver from numpy's gesdd)
        m = np.random.default_rng(1).standard_normal((5, 4))
        u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        tau = np.median(s)
        ref = sum(s[i] * np.outer(u[:, i], vt[i]) for i in range(len(s)) if s[i] >= tau)
        np.testing.assert_allclose(svt_threshold(m, tau), ref, atol=1e-10)

    def test_soft_mode(self):
        np.testing.assert_allclose(svt_threshold(np.diag([3.0, 1.0]), 2.0, "soft"), np.diag([1.0, 0.0]), atol=1e-14)

    def test_unknown_mode(self):
        with pytest.raises(InvalidArgumentError):
            svt_threshold(np.eye(2), 1.0, "medium")

    @given(
        hnp.arrays(np.float64, (5, 4), elements=st.floats(-10, 10)),
        st.floats(0.01, 20),
        st.sampled_from(["hard", "soft"]),
    )
    def test_never_expands(self, m, tau, mode):
        out = svt_threshold(m, tau, mode)
        s_in = np.linalg.svd(m, compute_uv=False)
        s_out = np.linalg.svd(out, compute_uv=False)
        assert np.all(s_out <= s_in + 1e-9)
        assert np.linalg.norm(out) <= np.linalg.norm(m) + 1e-9


class TestSvtComplete:
    def test_fully_observed_identity_threshold(self):
        a = np.random.default_rng(2).standard_normal((6, 4))
        tau = 0.5 * np.linalg.svd(a, compute_uv=False).min()
        res = svt_complete(ObservedMatrix.full(a), SvtConfig(tau=tau, step=1.0))
        np.testing.assert_allclose(res.matrix, a, atol=1e-6)
        assert res.trace.termination == Termination.CONVERGED

    def test_rank_one_recovery(self):
        # shrinkage mode at the usual 5 * sqrt(mn) threshold; see the README
        rng = np.random.default_rng(0)
        truth = np.outer(rng.standard_normal(40), rng.standard_normal(30))
        x = ObservedMatrix(truth, random_mask(40, 30, 0.5, 100))
        cfg = SvtConfig(tau=5 * np.sqrt(truth.size), step=1.2, tol=1e-8, max_iter=5000, mode="soft")
        res = svt_complete(x, cfg)
        assert np.abs(res.matrix - truth)[~x.mask].max() < 1e-3

    def test_zero_step(self):
        _, x = masked_lowrank(20, 15, 2, 0.5, 3)
        res = svt_complete(x, SvtConfig(step=0.0))
        assert res.trace.termination == Termination.CONVERGED
        assert res.trace.residuals[-1] == pytest.approx(res.trace.residuals[0], rel=1e-12)

    def test_zero_estimate_keeps_accumulating(self):
        _, x = masked_lowrank(20, 15, 2, 0.5, 4)
        tau = 5 * np.sqrt(300)
        res = svt_complete(x, SvtConfig(tau=tau, step=2.4, tol=1e-6, mode="soft"))
        assert res.trace.residuals[-1] < 0.5 * res.trace.residuals[0]

    def test_divergence_names_step(self):
        _, x = masked_lowrank(20, 15, 2, 0.5, 5)
        with pytest.raises(DivergenceError, match="delta_k=5"):
            svt_complete(x, SvtConfig(step=5.0))

    def test_step_schedule(self):
        _, x = masked_lowrank(20, 15, 2, 0.5, 6)
        res = svt_complete(x, SvtConfig(step=[1.0, 0.5], max_iter=5))
        assert res.trace.iterations <= 5

    @pytest.mark.parametrize(
        "kwargs", [{"tau": 0.0}, {"step": -1.0}, {"tol": 0.0}, {"max_iter": 0}, {"mode": "x"}, {"step": []}]
    )
    def test_invalid_config(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            SvtConfig(**kwargs)


class TestAls:
    def test_exact_factorization(self):
        truth, _ = masked_lowrank(20, 15, 3, 0.0, 1)
        res = als_complete(ObservedMatrix.full(truth), AlsConfig(rank=3, ridge=0.0))
        assert res.trace.objectives[-1] <= 1e-8

    def test_rank_one_masked_entry(self):
        a = np.outer([1.0, 2.0], [3.0, 4.0])
        mask = np.array([[True, True], [True, False]])
        res = als_complete(ObservedMatrix(a, mask), AlsConfig(rank=1, ridge=0.0, tol=1e-14))
        assert res.matrix[1, 1] == pytest.approx(8.0, abs=1e-6)

    def test_rank_zero_rejected(self):
        with pytest.raises(InvalidArgumentError):
            AlsConfig(rank=0)

    @pytest.mark.parametrize("seed", range(50))
    def test_half_sweep_monotone(self, seed):
        _, x = masked_lowrank(25, 20, 2, 0.5, seed)
        obj = als_complete(x, AlsConfig(rank=2, ridge=0.1, max_iter=30)).trace.objectives
        assert all(b <= a * (1 + 1e-12) + 1e-12 for a, b in zip(obj, obj[1:]))

    def test_empty_rows_and_columns_flagged(self):
        _, x = masked_lowrank(10, 8, 2, 0.2, 2)
        mask = x.mask.copy()
        mask[4] = False
        mask[:, 6] = False
        res = als_complete(x.with_mask(mask), AlsConfig(rank=2))
        assert res.flags["unobserved_rows"] == [4]
        assert res.flags["unobserved_columns"] == [6]
        assert not res.factors.components[4].any()
        assert not res.factors.loadings[:, 6].any()
