"""Synthetic test tensors.

Randomness comes from a Philox counter-based generator so that a seed gives
the same tensor on every platform numpy supports.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .kruskal import KruskalTensor, reconstruct
from .orthogonalize import orthogonalize
from .tensor import DenseTensor, norm

__all__ = [
    "make_rng",
    "random_tensor",
    "lowrank_tensor",
    "hilbert_tensor",
    "orthogonal_noise_tensor",
    "generate",
    "KINDS",
]

KINDS = ("random", "lowrank", "hilbert", "orth-noise")


def make_rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"dimensions must be positive, got {dims}")
    return dims


def random_tensor(dims, rng: np.random.Generator) -> DenseTensor:
    """I.i.d. standard normal entries."""
    return DenseTensor(rng.standard_normal(_dims(dims)))


def lowrank_tensor(dims, rank: int, rng: np.random.Generator) -> DenseTensor:
    """Sum of ``rank`` rank-one terms with i.i.d. standard normal factors."""
    dims = _dims(dims)
    return reconstruct(KruskalTensor([rng.standard_normal((d, rank)) for d in dims]))


def hilbert_tensor(dims) -> DenseTensor:
    """``a(i_1, ..., i_N) = 1 / (i_1 + ... + i_N - N + 1)`` with 1-based indices."""
    dims = _dims(dims)
    idx = sum(np.indices(dims))  # 0-based index sum
    return DenseTensor(1.0 / (idx + 1.0))


def orthogonal_noise_tensor(dims, rank: int, rng: np.random.Generator,
                            noise_level: float = 0.1):
    """Planted orthogonal rank-``rank`` tensor plus scaled Gaussian noise.

    The orthonormal list comes from orthogonalizing random Gaussian factors;
    weights are uniform on ``[1, 2]``. The noise is rescaled so that
    ``||noise|| = noise_level * ||planted||``.

    Returns
    -------
    tensor : DenseTensor
    planted : KruskalTensor
        The weighted orthonormal list behind the clean part.
    """
    dims = _dims(dims)
    raw = KruskalTensor([rng.standard_normal((d, rank)) for d in dims])
    ortho = orthogonalize(raw)
    weights = rng.uniform(1.0, 2.0, size=rank)
    planted = KruskalTensor(ortho.factors, weights)
    b1 = reconstruct(planted).data
    b2 = rng.standard_normal(dims)
    rho = noise_level * norm(b1) / norm(b2) if noise_level else 0.0
    return DenseTensor(b1 + rho * b2), planted


def generate(kind: str, dims, rank: int = 5, seed: Optional[int] = 0,
             noise_level: float = 0.1) -> DenseTensor:
    """Dispatch on ``kind`` (one of :data:`KINDS`)."""
    rng = make_rng(seed)
    if kind == "random":
        return random_tensor(dims, rng)
    if kind == "lowrank":
        return lowrank_tensor(dims, rank, rng)
    if kind == "hilbert":
        return hilbert_tensor(dims)
    if kind == "orth-noise":
        return orthogonal_noise_tensor(dims, rank, rng, noise_level)[0]
    raise ValueError(f"unknown tensor kind {kind!r}; expected one of {KINDS}")
