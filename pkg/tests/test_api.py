import numpy as np
import pytest

import srpca
from srpca.api import complete
from srpca.baselines import AlsConfig, SvtConfig, als_complete, svt_complete
from srpca.core import CompletionConfig, srpca_complete
from srpca.fast import fast_srpca_complete
from srpca.observation import destandardize, standardize

from synth import masked_lowrank


@pytest.fixture
def x():
    return masked_lowrank(30, 20, 2, 0.4, 0)[1]


def test_dispatch_srpca_variants(x):
    cfg = CompletionConfig(rank=2)
    np.testing.assert_array_equal(complete(x, cfg).matrix, srpca_complete(x, cfg).matrix)
    cfg = CompletionConfig(rank=2, algorithm="fast_srpca", lam=1e-3)
    np.testing.assert_array_equal(complete(x, cfg).matrix, fast_srpca_complete(x, cfg).matrix)


def test_baselines_raw(x):
    cfg = CompletionConfig(rank=2, algorithm="als", standardize=False, seed=3)
    expected = als_complete(x, AlsConfig(rank=2, tol=cfg.tol, max_iter=cfg.max_iter, seed=3))
    np.testing.assert_array_equal(complete(x, cfg).matrix, expected.matrix)


def test_baselines_standardized(x):
    cfg = CompletionConfig(rank=2, algorithm="svt")
    res = complete(x, cfg, svt=SvtConfig(max_iter=20))
    xs, stats = standardize(x)
    direct = svt_complete(xs, SvtConfig(max_iter=20))
    np.testing.assert_array_equal(res.matrix_std, direct.matrix)
    np.testing.assert_array_equal(res.matrix, destandardize(direct.matrix, stats))


def test_public_exports():
    for name in srpca.__all__:
        assert hasattr(srpca, name)
    assert srpca.BACKEND in ("cython", "python")
