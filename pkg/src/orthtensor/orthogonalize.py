"""Turn an approximately orthogonal list of rank-one tensors into an exactly
orthonormal one, and project a tensor onto its span.

Components are processed in order. For component ``l`` and every earlier
component ``r`` the mode in which their normalized vectors are closest to
orthogonal is chosen; in each mode ``n``, ``u_l^(n)`` is then projected onto
the orthogonal complement of the earlier vectors assigned to ``n`` and
renormalized. Earlier components are never touched again, so orthogonality
established for a pair survives all later steps.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DegenerateComponentError, InfeasibleError
from .kruskal import KruskalTensor
from .tensor import _arr, mttkrp

__all__ = ["OrthonormalRankOneList", "orthogonalize", "project"]

_RESIDUAL_FLOOR = 1e-10
_RCOND = 1e-12


@dataclass
class OrthonormalRankOneList:
    """Unit-norm mode vectors whose rank-one tensors are mutually orthogonal.

    ``sigma`` holds the projection coefficients once :func:`project` has run.
    """

    factors: list
    sigma: Optional[np.ndarray] = None

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    def to_kruskal(self) -> KruskalTensor:
        return KruskalTensor([f.copy() for f in self.factors],
                             None if self.sigma is None else self.sigma.copy())


def _complement_basis(b: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``span(b)`` from a rank-revealing SVD."""
    u, s, _ = np.linalg.svd(b, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return u[:, :0]
    return u[:, s > _RCOND * s[0]]


def _orthogonal_fill(q: np.ndarray, dim: int) -> np.ndarray:
    """First standard basis vector with a nonzero remainder outside ``span(q)``."""
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1.0
        r = e - q @ (q.T @ e)
        r -= q @ (q.T @ r)
        nr = np.linalg.norm(r)
        if nr > 1e-8:
            return r / nr
    raise InfeasibleError("no direction orthogonal to the assigned vectors exists")


def orthogonalize(k: KruskalTensor, check_each_step: bool = False) -> OrthonormalRankOneList:
    """Make the rank-one components of ``k`` an orthonormal list.

    Weights of ``k`` are ignored; only the directions of the mode vectors
    matter.

    Parameters
    ----------
    k : KruskalTensor
    check_each_step : bool
        Assert pairwise orthogonality of the processed prefix after every
        component (debugging aid; costs ``O(R^2)`` per step).

    Raises
    ------
    DegenerateComponentError
        If an input mode vector has zero norm.
    InfeasibleError
        If a vector must be made orthogonal to a set of vectors that already
        spans its whole space.
    """
    N, R = k.ndim, k.rank
    us = []
    for n, f in enumerate(k.factors):
        norms = np.linalg.norm(f, axis=0)
        bad = np.flatnonzero(norms == 0)
        if bad.size:
            raise DegenerateComponentError(int(bad[0]), f"component {int(bad[0])} has a zero vector in mode {n}")
        us.append(f / norms)

    for ell in range(1, R):
        # all of P is formed before component ell is modified
        p = np.stack([np.abs(us[n][:, :ell].T @ us[n][:, ell]) for n in range(N)])
        # argmin returns the first minimum, so ties go to the lowest mode
        chosen = np.argmin(p, axis=0)
        for n in range(N):
            idx = np.flatnonzero(chosen == n)
            if idx.size == 0:
                continue
            u = us[n][:, ell]
            q = _complement_basis(us[n][:, idx])
            # project twice so cancellation cannot leave a component in span(q)
            r = u - q @ (q.T @ u)
            r -= q @ (q.T @ r)
            nr = np.linalg.norm(r)
            if nr < _RESIDUAL_FLOOR:
                if q.shape[1] >= us[n].shape[0]:
                    raise InfeasibleError(
                        f"mode {n} of size {us[n].shape[0]} has no room left for component {ell}")
                r = _orthogonal_fill(q, us[n].shape[0])
            else:
                r = r / nr
            us[n][:, ell] = r
        if check_each_step:
            g = np.ones((ell + 1, ell + 1))
            for n in range(N):
                g *= us[n][:, :ell + 1].T @ us[n][:, :ell + 1]
            off = g - np.diag(np.diag(g))
            assert np.max(np.abs(off)) <= 1e-12, f"orthogonality lost at component {ell}"
    return OrthonormalRankOneList(us)


def project(a, lst: OrthonormalRankOneList) -> OrthonormalRankOneList:
    """Orthogonal projection of ``a`` onto the span of the list.

    Returns a new list with ``sigma[r] = <a, u_r^(0) o ... o u_r^(N-1)>``.
    """
    a = _arr(a)
    w = mttkrp(a, lst.factors, 0)
    sigma = np.sum(w * lst.factors[0], axis=0)
    return OrthonormalRankOneList([f.copy() for f in lst.factors], sigma)
