"""Naive reference implementations used as independent test oracles.

Everything here loops over explicit indices and shares no code with the
package beyond plain numpy arrays.
"""
import itertools

import numpy as np


def entries(dims):
    return itertools.product(*(range(d) for d in dims))


def naive_inner(a, b):
    return sum(a[idx] * b[idx] for idx in entries(a.shape))


def naive_unfold(a, n):
    dims = a.shape
    cols = int(np.prod([d for k, d in enumerate(dims) if k != n]))
    out = np.zeros((dims[n], cols))
    for idx in entries(dims):
        j, stride = 0, 1
        for k, d in enumerate(dims):
            if k == n:
                continue
            j += idx[k] * stride
            stride *= d
        out[idx[n], j] = a[idx]
    return out


def naive_mode_product(a, m, n):
    dims = list(a.shape)
    dims[n] = m.shape[0]
    out = np.zeros(dims)
    for idx in entries(dims):
        total = 0.0
        for i in range(a.shape[n]):
            src = list(idx)
            src[n] = i
            total += m[idx[n], i] * a[tuple(src)]
        out[idx] = total
    return out


def naive_khatri_rao(a, b):
    R = a.shape[1]
    out = np.zeros((a.shape[0] * b.shape[0], R))
    for r in range(R):
        out[:, r] = np.kron(a[:, r], b[:, r])
    return out


def naive_reconstruct(factors, weights=None):
    dims = tuple(f.shape[0] for f in factors)
    R = factors[0].shape[1]
    w = np.ones(R) if weights is None else weights
    out = np.zeros(dims)
    for idx in entries(dims):
        out[idx] = sum(w[r] * np.prod([f[i, r] for f, i in zip(factors, idx)]) for r in range(R))
    return out


def rank_one(vectors):
    out = vectors[0]
    for v in vectors[1:]:
        out = np.multiply.outer(out, v)
    return out


def naive_gram_hadamard(factors, omit=None):
    R = factors[0].shape[1]
    out = np.ones((R, R))
    for s in range(R):
        for t in range(R):
            for n, f in enumerate(factors):
                if n != omit:
                    out[s, t] *= sum(f[i, s] * f[i, t] for i in range(f.shape[0]))
    return out


def naive_objective(a, factors, lam, c):
    R = factors[0].shape[1]
    resid = a - naive_reconstruct(factors)
    val = 0.5 * np.sum(resid ** 2)
    comps = [rank_one([f[:, r] for f in factors]) for r in range(R)]
    for s in range(R):
        for t in range(R):
            if s == t:
                continue
            g = np.sum(comps[s] * comps[t])
            val += 0.5 * lam[s, t] * g + 0.25 * c[s, t] * g ** 2
    return val


def naive_penalty(factors, mu):
    R = factors[0].shape[1]
    delta = [np.prod([np.linalg.norm(f[:, r]) for f in factors]) for r in range(R)]
    c = np.zeros((R, R))
    for s in range(R):
        for t in range(R):
            if s != t:
                c[s, t] = mu / (delta[s] ** 2 * delta[t] ** 2)
    return c


def naive_update(factors, lam, c):
    R = factors[0].shape[1]
    out = lam.copy()
    for s in range(R):
        for t in range(R):
            if s != t:
                g = np.prod([np.dot(f[:, s], f[:, t]) for f in factors])
                out[s, t] += c[s, t] * g
    return out


def naive_theta(factors):
    R = factors[0].shape[1]
    best = 0.0
    for s in range(R):
        for t in range(R):
            if s == t:
                continue
            cosines = [abs(np.dot(f[:, s], f[:, t])) / (np.linalg.norm(f[:, s]) * np.linalg.norm(f[:, t]))
                       for f in factors]
            best = max(best, min(cosines))
    return best


def central_differences(fun, x, rel_step=1e-6):
    """Central differences with step ``rel_step * (1 + |x_i|)`` per entry."""
    g = np.zeros_like(x)
    for i in range(x.size):
        h = rel_step * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2 * h)
    return g


def random_symmetric_offdiag(rng, R, low=0.0, high=1.0):
    m = rng.uniform(low, high, (R, R))
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 0.0)
    return m


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))
