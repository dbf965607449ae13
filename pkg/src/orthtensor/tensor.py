"""Dense N-way tensors and the multilinear kernels built on them.

Modes are numbered from 0. Flat storage is first-index-fastest (Fortran
order), so the mode-0 unfolding is a reshape of the flat values and the
remaining unfoldings follow the Kolda--Bader column ordering.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .exceptions import DomainError, ShapeError

__all__ = [
    "DenseTensor",
    "inner",
    "norm",
    "angle",
    "unfold",
    "fold",
    "mode_product",
    "multi_mode_product",
    "khatri_rao",
    "mttkrp",
    "hosvd",
]


class DenseTensor:
    """A real N-way array with explicit dimensions.

    Parameters
    ----------
    data : array_like
        Any array; it is converted to a float64 ndarray of the same shape.

    Notes
    -----
    ``values`` exposes the entries flattened first-index-fastest, which is the
    layout used by the on-disk tensor formats.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.asarray(data, dtype=float)
        if arr.ndim < 1:
            raise ShapeError("a tensor needs at least one mode")
        if any(d < 1 for d in arr.shape):
            raise ShapeError(f"all dimensions must be positive, got {arr.shape}")
        self.data = arr

    @classmethod
    def from_values(cls, dims: Sequence[int], values) -> "DenseTensor":
        """Build a tensor from first-index-fastest flat values."""
        dims = tuple(int(d) for d in dims)
        values = np.asarray(values, dtype=float).ravel()
        if len(dims) < 1 or any(d < 1 for d in dims):
            raise ShapeError(f"invalid dimensions {dims}")
        if values.size != int(np.prod(dims)):
            raise ShapeError(f"{values.size} values do not fill dims {dims}")
        return cls(values.reshape(dims, order="F"))

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> "DenseTensor":
        return cls(np.zeros(tuple(dims)))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    shape = dims

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def values(self) -> np.ndarray:
        return self.data.ravel(order="F")

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __getitem__(self, idx):
        return self.data[idx]

    def __add__(self, other):
        return DenseTensor(self.data + _arr(other))

    def __sub__(self, other):
        return DenseTensor(self.data - _arr(other))

    def __mul__(self, scalar):
        return DenseTensor(self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return DenseTensor(-self.data)

    def __repr__(self):
        return f"DenseTensor(dims={self.dims})"


def _arr(a) -> np.ndarray:
    if isinstance(a, DenseTensor):
        return a.data
    return np.asarray(a, dtype=float)


def _check_mode(n: int, ndim: int) -> int:
    if not 0 <= n < ndim:
        raise ShapeError(f"mode {n} out of range for a {ndim}-way tensor")
    return n


def inner(a, b) -> float:
    """Sum of elementwise products of two tensors of identical shape."""
    a, b = _arr(a), _arr(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def norm(a) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(_arr(a).ravel()))


def angle(a, b) -> float:
    """Angle in radians between two nonzero tensors, in ``[0, pi]``."""
    na, nb = norm(a), norm(b)
    if na == 0 or nb == 0:
        raise DomainError("angle is undefined for a zero tensor")
    c = inner(a, b) / (na * nb)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def unfold(a, n: int) -> np.ndarray:
    """Mode-``n`` unfolding, shape ``I_n x prod(I_k, k != n)``.

    Column ``j`` is the mode-``n`` fiber whose remaining indices, in increasing
    mode order with the first varying fastest, have linear index ``j``.
    """
    a = _arr(a)
    _check_mode(n, a.ndim)
    return np.reshape(np.moveaxis(a, n, 0), (a.shape[n], -1), order="F")


def fold(m, n: int, dims: Sequence[int]) -> DenseTensor:
    """Inverse of :func:`unfold`."""
    dims = tuple(dims)
    _check_mode(n, len(dims))
    m = np.asarray(m, dtype=float)
    rest = dims[:n] + dims[n + 1:]
    if m.shape != (dims[n], int(np.prod(rest))):
        raise ShapeError(f"matrix of shape {m.shape} cannot fold into {dims} along mode {n}")
    t = np.reshape(m, (dims[n],) + rest, order="F")
    return DenseTensor(np.moveaxis(t, 0, n))


def mode_product(a, m, n: int) -> DenseTensor:
    """n-mode product: multiply every mode-``n`` fiber of ``a`` by ``m``."""
    a = _arr(a)
    m = np.asarray(m, dtype=float)
    _check_mode(n, a.ndim)
    if m.ndim != 2 or m.shape[1] != a.shape[n]:
        raise ShapeError(f"matrix {m.shape} incompatible with mode {n} of size {a.shape[n]}")
    out = np.tensordot(m, a, axes=(1, n))
    return DenseTensor(np.moveaxis(out, 0, n))


def multi_mode_product(a, ms: Sequence) -> DenseTensor:
    """Apply ``ms[n]`` along every mode ``n``."""
    a = _arr(a)
    if len(ms) != a.ndim:
        raise ShapeError(f"need {a.ndim} matrices, got {len(ms)}")
    out = a
    for n, m in enumerate(ms):
        out = mode_product(out, m, n).data
    return DenseTensor(out)


def khatri_rao(ms: Sequence) -> np.ndarray:
    """Columnwise Kronecker product; the last matrix's row index varies fastest."""
    ms = [np.asarray(m, dtype=float) for m in ms]
    if not ms:
        raise ShapeError("khatri_rao needs at least one matrix")
    R = ms[0].shape[1]
    if any(m.ndim != 2 or m.shape[1] != R for m in ms):
        raise ShapeError("all Khatri-Rao operands must share the column count")
    out = ms[0]
    for m in ms[1:]:
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, R)
    return out


def mttkrp(a, factors: Sequence, n: int) -> np.ndarray:
    """Matricized tensor times Khatri--Rao product ``A_(n) V^(-n)``.

    ``V^(-n)`` is the Khatri--Rao product of the factors in descending mode
    order with mode ``n`` left out.
    """
    a = _arr(a)
    _check_mode(n, a.ndim)
    if len(factors) != a.ndim:
        raise ShapeError(f"need {a.ndim} factor matrices, got {len(factors)}")
    for k, f in enumerate(factors):
        if k != n and np.shape(f)[0] != a.shape[k]:
            raise ShapeError(f"factor {k} has {np.shape(f)[0]} rows, expected {a.shape[k]}")
    R = np.shape(factors[n])[1]
    others = [factors[k] for k in reversed(range(a.ndim)) if k != n]
    if not others:
        return np.repeat(a.reshape(-1, 1), R, axis=1)
    return unfold(a, n) @ khatri_rao(others)


def hosvd(a, eps: float = 1e-10):
    """Full higher-order SVD with numerical n-ranks.

    Parameters
    ----------
    a : DenseTensor or array_like
    eps : float
        Relative singular-value threshold defining the numerical n-rank.

    Returns
    -------
    core : DenseTensor
        Core tensor; entries with any index at or beyond the mode's n-rank are
        set to zero.
    us : list of ndarray
        Square orthogonal matrices, one per mode.
    nranks : list of int
    """
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    a = _arr(a)
    us, nranks = [], []
    for n in range(a.ndim):
        an = unfold(a, n)
        # full_matrices only when the column side is the smaller one; U stays square
        u, s, _ = np.linalg.svd(an, full_matrices=an.shape[0] > an.shape[1])
        smax = s[0] if s.size else 0.0
        nranks.append(int(np.sum(s > eps * smax)) if smax > 0 else 0)
        us.append(u)
    core = multi_mode_product(a, [u.T for u in us]).data.copy()
    for n, r in enumerate(nranks):
        idx = [slice(None)] * a.ndim
        idx[n] = slice(r, None)
        core[tuple(idx)] = 0.0
    return DenseTensor(core), us, nranks
