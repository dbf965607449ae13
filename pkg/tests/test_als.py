import numpy as np
import pytest

from orthtensor.als import AlsConfig, als_fit, hosvd_init
from orthtensor.generators import generate, make_rng
from orthtensor.kruskal import relative_error
from orthtensor.tensor import multi_mode_product
from oracles import random_orthogonal, rank_one

DIMS = (20, 16, 10, 32)


def test_config_validation():
    with pytest.raises(ValueError):
        AlsConfig(0)
    with pytest.raises(ValueError):
        AlsConfig(2, rel_fn_tol=0)
    with pytest.raises(ValueError):
        AlsConfig(2, init="svd")


def test_hosvd_init_rank_one_recovers_directions():
    vs = [make_rng(1).standard_normal(d) for d in (4, 3, 5)]
    k = hosvd_init(rank_one(vs), 1)
    for f, v in zip(k.factors, vs):
        assert abs(f[:, 0] @ v) / np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_hosvd_init_orthonormal_when_rank_fits():
    a = make_rng(2).standard_normal((6, 5, 7))
    for f in hosvd_init(a, 4).factors:
        np.testing.assert_allclose(f.T @ f, np.eye(4), atol=1e-12)


def test_hosvd_init_padding():
    # more columns than rows cannot all be orthonormal: the singular-vector
    # block stays orthonormal and every padded column has unit norm
    a = make_rng(3).standard_normal((3, 6, 6))
    k = hosvd_init(a, 5, make_rng(0))
    f = k.factors[0]
    assert f.shape == (3, 5)
    np.testing.assert_allclose(f[:, :3].T @ f[:, :3], np.eye(3), atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(f, axis=0), 1.0, rtol=1e-13)
    np.testing.assert_allclose(k.factors[1].T @ k.factors[1], np.eye(5), atol=1e-12)


def test_exact_rank_five_recovered():
    a = generate("lowrank", DIMS, rank=5, seed=0)
    k, _ = als_fit(a, AlsConfig(5, rel_fn_tol=1e-8))
    assert relative_error(a, k) <= 1e-4


def test_random_tensor_error_level():
    a = generate("random", DIMS, seed=0)
    k, _ = als_fit(a, AlsConfig(5, rel_fn_tol=1e-8))
    assert relative_error(a, k) == pytest.approx(0.9953, abs=0.005)


def test_rank_one_fast():
    a = rank_one([make_rng(4).standard_normal(d) for d in (3, 4, 5)])
    k, trace = als_fit(a, AlsConfig(1))
    assert trace.iterations <= 3
    assert relative_error(a, k) <= 1e-10


@pytest.mark.parametrize("seed", range(3))
def test_error_nonincreasing(seed):
    a = make_rng(seed).standard_normal((6, 5, 4))
    _, trace = als_fit(a, AlsConfig(3, init="random", seed=seed, max_iters=60, rel_fn_tol=1e-14))
    r = np.array(trace.rerr)
    assert np.all(np.diff(r) <= 1e-12 * r[:-1])


def test_trace_reports_stop_reason():
    a = make_rng(5).standard_normal((4, 4, 4))
    _, trace = als_fit(a, AlsConfig(2, max_iters=2, rel_fn_tol=1e-300))
    assert trace.stop_reason == "max_iters"
    assert trace.iterations == 2


def test_rotation_invariance_of_fit():
    diffs = []
    for seed in range(5):
        g = make_rng(100 + seed)
        a = g.standard_normal((8, 7, 6))
        qs = [random_orthogonal(g, d) for d in a.shape]
        b = multi_mode_product(a, qs)
        ka, _ = als_fit(a, AlsConfig(3))
        kb, _ = als_fit(b, AlsConfig(3))
        diffs.append(abs(relative_error(a, ka) - relative_error(b, kb)))
    assert max(diffs) <= 2e-2
