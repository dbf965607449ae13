"""CP alternating least squares, used both as a baseline and to initialize
the augmented Lagrangian solver."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alm import RunTrace
from .generators import make_rng
from .kruskal import KruskalTensor
from .tensor import _arr, khatri_rao, unfold

__all__ = ["AlsConfig", "hosvd_init", "random_init", "als_fit"]


@dataclass
class AlsConfig:
    """``init`` is ``"hosvd"`` or ``"random"``; ``seed`` only matters for padding
    and random starts."""

    rank: int
    max_iters: int = 500
    rel_fn_tol: float = 1e-8
    init: str = "hosvd"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.max_iters < 1 or not self.rel_fn_tol > 0:
            raise ValueError("max_iters must be >= 1 and rel_fn_tol positive")
        if self.init not in ("hosvd", "random"):
            raise ValueError(f"unknown init {self.init!r}")


def hosvd_init(a, rank: int, rng: Optional[np.random.Generator] = None) -> KruskalTensor:
    """Leading left singular vectors of every unfolding.

    When ``rank`` exceeds ``I_n`` the ``I_n`` singular vectors are padded with
    random unit columns.
    """
    a = _arr(a)
    if rank < 1:
        raise ValueError("rank must be >= 1")
    factors = []
    for n in range(a.ndim):
        u, _, _ = np.linalg.svd(unfold(a, n), full_matrices=False)
        take = min(rank, a.shape[n], u.shape[1])
        f = u[:, :take]
        if take < rank:
            rng = rng or make_rng(0)
            pad = rng.standard_normal((a.shape[n], rank - take))
            f = np.hstack([f, pad / np.linalg.norm(pad, axis=0)])
        factors.append(f)
    return KruskalTensor(factors)


def random_init(dims, rank: int, rng: np.random.Generator) -> KruskalTensor:
    return KruskalTensor([rng.standard_normal((d, rank)) for d in dims])


def _pinv_solve(w: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    # gamma is symmetric PSD; cut eigenvalues below 1e-12 of the largest
    vals, vecs = np.linalg.eigh(gamma)
    top = vals[-1] if vals.size else 0.0
    keep = vals > 1e-12 * top if top > 0 else np.zeros_like(vals, dtype=bool)
    inv = (vecs[:, keep] / vals[keep]) @ vecs[:, keep].T
    return w @ inv


def als_fit(a, cfg: AlsConfig, init: Optional[KruskalTensor] = None):
    """Fit a rank-``cfg.rank`` CP model by alternating least squares.

    Each mode update solves ``V^(n) Gamma^(n) = A_(n) V^(-n)`` exactly. The
    sweep stops when the fit ``1 - ||a - model|| / ||a||`` changes by less than
    ``rel_fn_tol`` or after ``max_iters`` sweeps. After every sweep the columns
    of all but the last mode are normalized and their norms moved into the
    last mode.

    Returns
    -------
    KruskalTensor
        Unweighted factors.
    RunTrace
        One row per sweep; ``rerr`` holds the relative error and ``theta`` is
        left at ``nan``.
    """
    a = _arr(a)
    N = a.ndim
    rng = make_rng(cfg.seed)
    if init is None:
        init = hosvd_init(a, cfg.rank, rng) if cfg.init == "hosvd" else random_init(a.shape, cfg.rank, rng)
    factors = [f.copy() for f in init.factors]
    factors[0] = factors[0] * init.w

    unfoldings = [unfold(a, n) for n in range(N)]
    norm_a = float(np.linalg.norm(a.ravel()))
    grams = [f.T @ f for f in factors]
    trace = RunTrace()
    t0 = time.perf_counter()
    fit_old = None
    for it in range(1, cfg.max_iters + 1):
        prev = [f.copy() for f in factors]
        for n in range(N):
            gamma = np.ones((cfg.rank, cfg.rank))
            for m in range(N):
                if m != n:
                    gamma *= grams[m]
            others = [factors[k] for k in reversed(range(N)) if k != n]
            w = unfoldings[n] @ khatri_rao(others) if others else np.repeat(unfoldings[n], cfg.rank, axis=1)
            factors[n] = _pinv_solve(w, gamma)
            grams[n] = factors[n].T @ factors[n]
        # the residual is formed explicitly; the norm identity loses about half
        # the digits once the fit is close to exact
        if N > 1:
            model = factors[0] @ khatri_rao(factors[:0:-1]).T
        else:
            model = factors[0].sum(axis=1, keepdims=True)
        resid = float(np.linalg.norm(unfoldings[0] - model))
        rerr = resid / norm_a if norm_a > 0 else 0.0
        fit = 1.0 - rerr
        rel_change = float(np.sqrt(sum(np.sum((f - p) ** 2) for f, p in zip(factors, prev)))
                           / max(np.sqrt(sum(np.sum(p ** 2) for p in prev)), 1e-300))
        if N > 1:
            scale = np.ones(cfg.rank)
            for n in range(N - 1):
                norms = np.linalg.norm(factors[n], axis=0)
                nz = norms > 0
                factors[n][:, nz] /= norms[nz]
                scale[nz] *= norms[nz]
                grams[n] = factors[n].T @ factors[n]
            factors[N - 1] = factors[N - 1] * scale
            grams[N - 1] = factors[N - 1].T @ factors[N - 1]
        trace.append(float("nan"), rel_change, 1, rerr, time.perf_counter() - t0)
        if fit_old is not None and abs(fit - fit_old) < cfg.rel_fn_tol:
            trace.stop_reason = "tolerance"
            break
        fit_old = fit
    else:
        trace.stop_reason = "max_iters"
    return KruskalTensor(factors), trace
