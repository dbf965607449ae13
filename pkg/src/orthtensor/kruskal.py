"""Kruskal (CP) tensors and orthogonality diagnostics on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import DomainError, ShapeError
from .tensor import DenseTensor, _arr, khatri_rao, norm

__all__ = [
    "KruskalTensor",
    "reconstruct",
    "gram_hadamard",
    "pairwise_inner",
    "is_orthogonal",
    "rebalance",
    "component_norms",
    "kruskal_norm",
    "relative_error",
]


@dataclass
class KruskalTensor:
    """Sum of ``R`` rank-one tensors ``sum_r w_r v_r^(0) o ... o v_r^(N-1)``.

    ``factors[n]`` has shape ``(I_n, R)``; its columns are the mode-``n``
    vectors of the components. ``weights=None`` means all-ones.
    """

    factors: list
    weights: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.factors = [np.array(f, dtype=float, ndmin=2) for f in self.factors]
        if not self.factors:
            raise ShapeError("a Kruskal tensor needs at least one factor matrix")
        R = self.factors[0].shape[1]
        if R < 1 or any(f.ndim != 2 or f.shape[1] != R for f in self.factors):
            raise ShapeError("factor matrices must be 2-D and share a positive column count")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float).ravel()
            if self.weights.size != R:
                raise ShapeError(f"{self.weights.size} weights for rank {R}")

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def ndim(self) -> int:
        return len(self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    shape = dims

    @property
    def w(self) -> np.ndarray:
        """Weights with the all-ones default filled in."""
        return np.ones(self.rank) if self.weights is None else self.weights

    def copy(self) -> "KruskalTensor":
        return KruskalTensor([f.copy() for f in self.factors],
                             None if self.weights is None else self.weights.copy())

    def full(self) -> DenseTensor:
        return reconstruct(self)

    def component(self, r: int) -> "KruskalTensor":
        """The ``r``-th weighted rank-one term as its own Kruskal tensor."""
        return KruskalTensor([f[:, [r]] for f in self.factors], self.w[[r]])


def reconstruct(k: KruskalTensor) -> DenseTensor:
    """Dense form of a Kruskal tensor."""
    kr = khatri_rao([f for f in reversed(k.factors[1:])]) if k.ndim > 1 else np.ones((1, k.rank))
    mat = (k.factors[0] * k.w) @ kr.T
    return DenseTensor(mat.reshape(k.dims, order="F"))


def _grams(k: KruskalTensor) -> list[np.ndarray]:
    return [f.T @ f for f in k.factors]


def gram_hadamard(k: KruskalTensor, omit: Optional[int] = None) -> np.ndarray:
    """Hadamard product of the factor Gram matrices ``V^(n)^T V^(n)``.

    With ``omit=n`` mode ``n`` is skipped, which gives the matrix ``Gamma^(n)``
    that appears in the CP and augmented Lagrangian gradients. Weights are
    ignored.
    """
    out = np.ones((k.rank, k.rank))
    for n, f in enumerate(k.factors):
        if n != omit:
            out *= f.T @ f
    return out


def pairwise_inner(k: KruskalTensor) -> np.ndarray:
    """Matrix of inner products between the weighted rank-one components."""
    w = k.w
    return gram_hadamard(k) * np.outer(w, w)


def is_orthogonal(k: KruskalTensor, tol: float = 1e-10) -> tuple[bool, float]:
    """Check that the rank-one components are mutually orthogonal.

    The largest off-diagonal magnitude of :func:`pairwise_inner` is compared
    against ``tol`` times the largest squared component norm.

    Returns
    -------
    ok : bool
    max_offdiag : float
    """
    if tol < 0:
        raise DomainError("tol must be nonnegative")
    g = pairwise_inner(k)
    diag = np.diag(g)
    off = g - np.diag(diag)
    max_off = float(np.max(np.abs(off))) if k.rank > 1 else 0.0
    scale = float(np.max(diag))
    if scale <= 0:
        scale = 1.0
    return max_off <= tol * scale, max_off


def component_norms(k: KruskalTensor) -> np.ndarray:
    """``delta_r = prod_n ||v_r^(n)||`` (weights not included)."""
    return np.prod(np.stack([np.linalg.norm(f, axis=0) for f in k.factors]), axis=0)


def rebalance(k: KruskalTensor) -> KruskalTensor:
    """Rescale every component so that all its mode vectors share one norm.

    The common norm is ``delta_r ** (1/N)``; components with ``delta_r == 0``
    are zeroed in every mode. The represented tensor does not change.
    """
    N = k.ndim
    norms = np.stack([np.linalg.norm(f, axis=0) for f in k.factors])
    delta = np.prod(norms, axis=0)
    target = delta ** (1.0 / N)
    alive = delta > 0
    factors = []
    for n, f in enumerate(k.factors):
        scale = np.zeros(k.rank)
        scale[alive] = target[alive] / norms[n, alive]
        factors.append(f * scale)
    return KruskalTensor(factors, None if k.weights is None else k.weights.copy())


def kruskal_norm(k: KruskalTensor) -> float:
    """Norm of the represented tensor, computed from the factors alone."""
    return float(np.sqrt(max(float(np.sum(pairwise_inner(k))), 0.0)))


def relative_error(a, k: KruskalTensor) -> float:
    """``||a - reconstruct(k)|| / ||a||``."""
    a = _arr(a)
    na = norm(a)
    if na == 0:
        raise DomainError("relative error is undefined for a zero tensor")
    if tuple(a.shape) != k.dims:
        raise ShapeError(f"tensor dims {a.shape} differ from Kruskal dims {k.dims}")
    return norm(a - reconstruct(k).data) / na
