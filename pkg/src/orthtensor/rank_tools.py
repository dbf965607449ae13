"""k-rank, the uniqueness certificate, and constructions around orthogonal rank.

These are small exact-ish procedures used mostly to build test inputs with
known structure; ``k_rank`` is combinatorial and meant for ``R <= 8``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import InfeasibleError
from .generators import make_rng
from .kruskal import KruskalTensor, gram_hadamard
from .tensor import _arr, _check_mode, hosvd

__all__ = [
    "RankCertificate",
    "k_rank",
    "uniqueness_certificate",
    "fiber_orthogonal_decomposition",
    "best_fiber_mode",
    "make_nonorthogonal_unique",
    "subtensor_extension",
]

MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class RankCertificate:
    """Outcome of the k-rank sufficient condition for CP uniqueness."""

    krank_per_mode: tuple
    bound_lhs: int
    bound_rhs: int

    @property
    def uniqueness_holds(self) -> bool:
        return self.bound_lhs >= self.bound_rhs


def _full_column_rank(m: np.ndarray, tol: float) -> bool:
    s = np.linalg.svd(m, compute_uv=False)
    return s.size == m.shape[1] and s[0] > 0 and s[-1] > tol * s[0]


def k_rank(m, tol: float = 1e-10) -> int:
    """Largest ``k`` such that every ``k`` columns of ``m`` are independent.

    A column subset counts as independent when its smallest singular value
    exceeds ``tol`` times its largest. Returns 0 if some column is zero
    (relative to the largest column norm).
    """
    m = np.asarray(m, dtype=float)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    if m.ndim != 2:
        raise ValueError("expected a matrix")
    cols = m.shape[1]
    norms = np.linalg.norm(m, axis=0)
    if cols == 0 or norms.max() == 0 or np.any(norms <= tol * norms.max()):
        return 0
    k = 1
    for j in range(2, min(cols, m.shape[0]) + 1):
        if all(_full_column_rank(m[:, list(idx)], tol)
               for idx in itertools.combinations(range(cols), j)):
            k = j
        else:
            break
    return k


def uniqueness_certificate(k: KruskalTensor, tol: float = 1e-10) -> RankCertificate:
    """Check ``sum_n k_rank(V^(n)) >= 2R + N - 1``."""
    kr = tuple(k_rank(f, tol) for f in k.factors)
    return RankCertificate(kr, int(sum(kr)), 2 * k.rank + k.ndim - 1)


def best_fiber_mode(nranks) -> int:
    """Mode ``m`` minimizing the product of the other n-ranks (lowest on ties)."""
    nranks = list(nranks)
    prods = [int(np.prod(nranks[:m] + nranks[m + 1:])) for m in range(len(nranks))]
    return int(np.argmin(prods))


def fiber_orthogonal_decomposition(a, m: Optional[int] = None, eps: float = 1e-10) -> KruskalTensor:
    """Orthogonal decomposition with one term per nonzero mode-``m`` core fiber.

    The HOSVD core ``S`` is written as a sum over index tuples ``(i_k)_{k != m}``
    of ``e_{i_1} o ... o S(i_1, ..., :, ..., i_N) o ... o e_{i_N}``; mapping
    every mode back through its orthogonal HOSVD factor keeps distinct terms
    orthogonal. The number of terms is at most ``prod_{k != m} nranks[k]``.

    Parameters
    ----------
    a : DenseTensor or array_like
    m : int, optional
        Fiber mode (0-based). Defaults to the mode giving the smallest bound.
    eps : float
        Relative singular-value threshold for the n-ranks.
    """
    a = _arr(a)
    core, us, nranks = hosvd(a, eps)
    s = core.data
    m = best_fiber_mode(nranks) if m is None else _check_mode(m, a.ndim)
    N = a.ndim
    others = [k for k in range(N) if k != m]
    floor = 1e-14 * float(np.linalg.norm(s))
    cols = [[] for _ in range(N)]
    for idx in itertools.product(*(range(nranks[k]) for k in others)):
        sl = [slice(None)] * N
        for k, i in zip(others, idx):
            sl[k] = i
        fiber = s[tuple(sl)][: nranks[m]]
        if np.linalg.norm(fiber) <= floor:
            continue
        for k, i in zip(others, idx):
            cols[k].append(us[k][:, i])
        cols[m].append(us[m][:, : nranks[m]] @ fiber)
    if not cols[0]:
        # zero tensor: a single zero term keeps the Kruskal shape valid
        return KruskalTensor([np.zeros((d, 1)) for d in a.shape])
    return KruskalTensor([np.column_stack(c) for c in cols])


def make_nonorthogonal_unique(dims, rank: int, seed: Optional[int] = 0) -> KruskalTensor:
    """Random factors with full column rank in every mode and a non-diagonal
    Gram--Hadamard matrix.

    Such a tensor has CP rank ``rank`` but a strictly larger orthogonal rank.

    Raises
    ------
    InfeasibleError
        If ``rank < 2`` or ``rank > min(dims)``, or no sample passes within
        100 draws.
    """
    dims = tuple(int(d) for d in dims)
    if rank < 2 or rank > min(dims):
        raise InfeasibleError(f"need 2 <= rank <= min(dims), got rank {rank} for dims {dims}")
    rng = make_rng(seed)
    for _ in range(MAX_ATTEMPTS):
        k = KruskalTensor([rng.standard_normal((d, rank)) for d in dims])
        gh = gram_hadamard(k)
        off = np.abs(gh - np.diag(np.diag(gh))).max()
        if off > 1e-8 * np.abs(np.diag(gh)).max() and all(k_rank(f) == rank for f in k.factors):
            return k
    raise InfeasibleError("no admissible factors found")


def subtensor_extension(k: KruskalTensor, factor: float = 1.1) -> KruskalTensor:
    """Embed ``k`` as the leading mode-0 subtensor of an orthogonal decomposition.

    With ``t = factor * lambda_max(V0^T V0)``, ``t I - V0^T V0 = M^T M`` and the
    mode-0 factor becomes ``[V0; M]``. Its Gram matrix is ``t I``, so the
    Gram--Hadamard matrix of the result is diagonal whatever the other modes
    are. The first ``I_0`` mode-0 slices of the reconstruction equal
    ``reconstruct(k)``.
    """
    if not factor > 1:
        raise ValueError("factor must exceed 1")
    v0 = k.factors[0] * k.w
    gram = v0.T @ v0
    vals, vecs = np.linalg.eigh(gram)
    t = factor * vals[-1]
    resid = t - vals
    if t <= 0 or np.any(resid < -1e-12 * t):
        raise RuntimeError("shifted Gram matrix is not positive semidefinite")
    m = np.sqrt(np.clip(resid, 0.0, None))[:, None] * vecs.T
    return KruskalTensor([np.vstack([v0, m])] + [f.copy() for f in k.factors[1:]])
