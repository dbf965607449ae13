import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orthtensor.exceptions import DomainError, ShapeError
from orthtensor.kruskal import (
    KruskalTensor, component_norms, gram_hadamard, is_orthogonal, kruskal_norm, pairwise_inner,
    rebalance, reconstruct, relative_error,
)
from orthtensor.orthogonalize import orthogonalize
from orthtensor.tensor import inner, norm
from oracles import naive_gram_hadamard, naive_reconstruct, rank_one

rng = np.random.default_rng(5)


@st.composite
def kruskal_tensors(draw, max_ndim=4, max_rank=5, max_dim=6):
    N = draw(st.integers(1, max_ndim))
    R = draw(st.integers(1, max_rank))
    dims = draw(st.lists(st.integers(1, max_dim), min_size=N, max_size=N))
    seed = draw(st.integers(0, 2 ** 31))
    g = np.random.default_rng(seed)
    return KruskalTensor([g.standard_normal((d, R)) for d in dims])


def test_validation():
    with pytest.raises(ShapeError):
        KruskalTensor([np.ones((2, 2)), np.ones((3, 3))])
    with pytest.raises(ShapeError):
        KruskalTensor([np.ones((2, 2))], weights=np.ones(3))


def test_reconstruct_unit_rank_one():
    u = [np.array([1.0, 0.0]), np.array([0.0, 0.6, 0.8])]
    k = KruskalTensor([v[:, None] for v in u], np.array([-3.0]))
    assert norm(reconstruct(k)) == pytest.approx(3.0)


def test_reconstruct_identity_factors():
    k = KruskalTensor([np.eye(2), np.eye(2)], np.array([2.0, 5.0]))
    np.testing.assert_array_equal(reconstruct(k).data, np.diag([2.0, 5.0]))


def test_reconstruct_naive():
    f = [rng.standard_normal((d, 3)) for d in (2, 3, 4)]
    w = rng.standard_normal(3)
    np.testing.assert_allclose(reconstruct(KruskalTensor(f, w)).data, naive_reconstruct(f, w),
                               rtol=1e-12, atol=1e-14)


def test_gram_hadamard_cases():
    q, _ = np.linalg.qr(rng.standard_normal((5, 3)))
    k = KruskalTensor([q, rng.standard_normal((4, 3))])
    gh = gram_hadamard(k)
    np.testing.assert_allclose(gh - np.diag(np.diag(gh)), 0, atol=1e-14)
    one = KruskalTensor([rng.standard_normal((3, 2))])
    np.testing.assert_array_equal(gram_hadamard(one, omit=0), np.ones((2, 2)))
    f = [rng.standard_normal((d, 3)) for d in (2, 3, 4)]
    for omit in (None, 0, 2):
        np.testing.assert_allclose(gram_hadamard(KruskalTensor(f), omit), naive_gram_hadamard(f, omit),
                                   rtol=1e-12)


def test_pairwise_inner_cases():
    k = KruskalTensor(orthogonalize(KruskalTensor([rng.standard_normal((d, 3)) for d in (4, 3, 5)])).factors,
                      np.array([1.0, -2.0, 3.0]))
    np.testing.assert_allclose(pairwise_inner(k), np.diag([1.0, 4.0, 9.0]), atol=1e-12)
    f = rng.standard_normal((3, 1))
    dup = KruskalTensor([np.hstack([f, f]), np.hstack([f, f])])
    p = pairwise_inner(dup)
    assert np.linalg.matrix_rank(p) == 1
    assert np.ptp(p) == pytest.approx(0.0, abs=1e-12)


@given(kruskal_tensors())
@settings(max_examples=40, deadline=None)
def test_pairwise_inner_matches_dense(k):
    p = pairwise_inner(k)
    comps = [reconstruct(k.component(r)).data for r in range(k.rank)]
    scale = max(np.abs(p).max(), 1e-300)
    for s in range(k.rank):
        for t in range(k.rank):
            assert abs(p[s, t] - inner(comps[s], comps[t])) <= 1e-12 * scale


def test_is_orthogonal_cases():
    k = KruskalTensor([rng.standard_normal((d, 4)) for d in (5, 4, 6)])
    ok, off = is_orthogonal(KruskalTensor(orthogonalize(k).factors), 1e-10)
    assert ok and off <= 1e-10
    f = rng.standard_normal((3, 1))
    assert not is_orthogonal(KruskalTensor([np.hstack([f, f])] * 2))[0]
    assert is_orthogonal(KruskalTensor([f, f]))[0]
    with pytest.raises(DomainError):
        is_orthogonal(k, -1.0)


def test_rebalance_cases():
    u, v = rng.standard_normal((3, 1)), rng.standard_normal((4, 1))
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    bal = KruskalTensor([u, v])
    for f, g in zip(rebalance(bal).factors, bal.factors):
        np.testing.assert_allclose(f, g, rtol=1e-15)
    k = KruskalTensor([8 * u, v / 8])
    r = rebalance(k)
    n0, n1 = (np.linalg.norm(f) for f in r.factors)
    assert n0 == pytest.approx(n1)
    assert n0 * n1 == pytest.approx(1.0)


@given(kruskal_tensors())
@settings(max_examples=40, deadline=None)
def test_rebalance_equalizes_and_preserves(k):
    r = rebalance(k)
    norms = np.stack([np.linalg.norm(f, axis=0) for f in r.factors])
    np.testing.assert_allclose(norms, np.broadcast_to(norms[0], norms.shape), rtol=1e-13)
    dense, after = reconstruct(k).data, reconstruct(r).data
    assert norm(dense - after) <= 1e-12 * max(norm(dense), 1e-300)
    again = rebalance(r)
    for f, g in zip(again.factors, r.factors):
        np.testing.assert_allclose(f, g, rtol=1e-15, atol=1e-300)


def test_rebalance_zero_component():
    f = rng.standard_normal((3, 2))
    f[:, 1] = 0
    r = rebalance(KruskalTensor([f, rng.standard_normal((2, 2))]))
    assert np.all(r.factors[1][:, 1] == 0)
    assert np.all(r.factors[0][:, 1] == 0)


def test_kruskal_norm_cases():
    q = orthogonalize(KruskalTensor([rng.standard_normal((d, 3)) for d in (4, 4, 4)])).factors
    w = np.array([3.0, -4.0, 12.0])
    assert kruskal_norm(KruskalTensor(q, w)) == pytest.approx(13.0, rel=1e-12)
    f = [rng.standard_normal((d, 1)) for d in (2, 3)]
    expected = 2.5 * np.prod([np.linalg.norm(x) for x in f])
    assert kruskal_norm(KruskalTensor(f, np.array([2.5]))) == pytest.approx(expected, rel=1e-12)


@given(kruskal_tensors())
@settings(max_examples=40, deadline=None)
def test_kruskal_norm_matches_dense(k):
    assert kruskal_norm(k) == pytest.approx(norm(reconstruct(k)), rel=1e-10, abs=1e-12)


def test_relative_error_cases():
    k = KruskalTensor([rng.standard_normal((d, 2)) for d in (3, 4)])
    a = reconstruct(k)
    assert relative_error(a, k) == pytest.approx(0.0, abs=1e-15)
    zero = KruskalTensor([np.zeros((3, 2)), np.zeros((4, 2))])
    assert relative_error(a, zero) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        relative_error(np.zeros((3, 4)), k)
    with pytest.raises(ShapeError):
        relative_error(np.ones((4, 3)), k)


def test_mode_zero_orthonormal_gives_orthogonal_components():
    q, _ = np.linalg.qr(rng.standard_normal((6, 4)))
    k = KruskalTensor([q] + [rng.standard_normal((d, 4)) for d in (3, 5)])
    p = pairwise_inner(k)
    np.testing.assert_allclose(p - np.diag(np.diag(p)), 0, atol=1e-13)


def test_component_norms():
    f = [rng.standard_normal((d, 3)) for d in (2, 3)]
    expected = np.linalg.norm(f[0], axis=0) * np.linalg.norm(f[1], axis=0)
    np.testing.assert_allclose(component_norms(KruskalTensor(f)), expected)
