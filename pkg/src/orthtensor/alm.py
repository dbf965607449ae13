"""Augmented Lagrangian fitting of an orthogonal rank-R approximation.

The unknowns are the factor vectors ``v_r^(n)``; the constraints are
``prod_n <v_s^(n), v_t^(n)> = 0`` for every ordered pair ``s != t``. Each
outer iteration rebalances the components, sets per-pair penalty weights from
the component norms, minimizes the augmented Lagrangian with L-BFGS warm
started at the previous solution, and then updates the multipliers.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import DegenerateComponentError, ShapeError
from .kruskal import KruskalTensor, component_norms, gram_hadamard, rebalance
from .optimize import LbfgsConfig, LbfgsReport, lbfgs_minimize
from .tensor import _arr, khatri_rao, unfold

__all__ = [
    "AlmConfig",
    "AlmState",
    "RunTrace",
    "pack",
    "unpack",
    "objective",
    "gradient",
    "penalty_matrix",
    "update_multipliers",
    "theta",
    "AugmentedLagrangian",
    "od_alm_fit",
]

log = logging.getLogger(__name__)

DEGENERACY_FLOOR = 1e-12


@dataclass
class AlmConfig:
    rank: int
    eps_outer: float = 1e-4
    eps_inner: float = 1e-4
    max_outer: int = 25
    mu0: float = 1.0
    mu_growth: float = 10.0
    # subproblems stop on relative change in the objective value; measuring the
    # iterate instead stalls once the penalty weights make steps tiny
    inner: LbfgsConfig = field(default_factory=lambda: LbfgsConfig(rel_change_measure="f"))
    trace_rerr: bool = True

    def __post_init__(self):
        if self.rank < 1 or self.max_outer < 1:
            raise ValueError("rank and max_outer must be >= 1")
        if min(self.eps_outer, self.eps_inner, self.mu0) <= 0:
            raise ValueError("tolerances and mu0 must be positive")
        if not self.mu_growth > 1:
            raise ValueError("mu_growth must exceed 1")

    def inner_config(self) -> LbfgsConfig:
        cfg = LbfgsConfig(**vars(self.inner))
        cfg.grad_per_entry_tol = self.eps_inner
        return cfg


@dataclass
class AlmState:
    """Outer-iteration state: factors, multipliers, penalty weights and ``mu``.

    ``multipliers`` and ``penalty`` are symmetric ``R x R`` with zero diagonal.
    """

    factors: KruskalTensor
    multipliers: np.ndarray
    penalty: np.ndarray
    mu: float = 1.0
    k: int = 0

    @classmethod
    def initial(cls, factors: KruskalTensor, mu: float = 1.0) -> "AlmState":
        R = factors.rank
        return cls(factors, np.zeros((R, R)), np.zeros((R, R)), mu, 0)


@dataclass
class RunTrace:
    """Per-outer-iteration record of a fit."""

    theta: list = field(default_factory=list)
    rel_change: list = field(default_factory=list)
    inner_iters: list = field(default_factory=list)
    rerr: list = field(default_factory=list)
    elapsed_seconds: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    penalties: list = field(default_factory=list)
    stop_reason: str = ""

    @property
    def iterations(self) -> int:
        return len(self.theta)

    def append(self, theta, rel_change, inner_iters, rerr, seconds, mu=None, penalty=None):
        self.theta.append(float(theta))
        self.rel_change.append(float(rel_change))
        self.inner_iters.append(int(inner_iters))
        self.rerr.append(float(rerr))
        self.elapsed_seconds.append(float(seconds))
        if mu is not None:
            self.mu.append(float(mu))
        if penalty is not None:
            self.penalties.append(np.array(penalty))

    def rows(self):
        for i in range(self.iterations):
            yield (i + 1, self.theta[i], self.rel_change[i], self.inner_iters[i],
                   self.rerr[i], self.elapsed_seconds[i])


def pack(k: KruskalTensor) -> np.ndarray:
    """Stack ``[v_1^(0); ...; v_R^(0); ...; v_1^(N-1); ...; v_R^(N-1)]``."""
    return np.concatenate([f.ravel(order="F") for f in k.factors])


def unpack(x: np.ndarray, dims, rank: int) -> KruskalTensor:
    if x.size != sum(dims) * rank:
        raise ShapeError(f"vector of length {x.size} does not match dims {tuple(dims)} and rank {rank}")
    factors, pos = [], 0
    for d in dims:
        factors.append(np.reshape(x[pos:pos + d * rank], (d, rank), order="F"))
        pos += d * rank
    return KruskalTensor(factors)


class AugmentedLagrangian:
    """Value and gradient of the augmented Lagrangian for a fixed tensor.

    Unfoldings of the tensor are computed once, so repeated evaluations (as in
    L-BFGS) only pay for the Khatri--Rao products and small ``R x R`` algebra.
    """

    def __init__(self, a, rank: int):
        a = _arr(a)
        self.dims = a.shape
        self.rank = rank
        self.norm_sq = float(np.dot(a.ravel(), a.ravel()))
        self.unfoldings = [np.ascontiguousarray(unfold(a, n)) for n in range(a.ndim)]
        self.evaluations = 0

    def mttkrp(self, factors, n):
        others = [factors[k] for k in reversed(range(len(factors))) if k != n]
        if not others:
            return np.repeat(self.unfoldings[n], self.rank, axis=1)
        return self.unfoldings[n] @ khatri_rao(others)

    def value_and_grads(self, factors, multipliers, penalty):
        """Return ``(L, [dL/dV^(n)])`` for a list of factor matrices."""
        self.evaluations += 1
        N = len(factors)
        grams = [f.T @ f for f in factors]
        grads = []
        gamma_full = None
        cross = 0.0
        for n in range(N):
            gamma = np.ones((self.rank, self.rank))
            for m in range(N):
                if m != n:
                    gamma *= grams[m]
            w = self.mttkrp(factors, n)
            inner_mat = gamma + gamma * multipliers + gamma * gamma * grams[n] * penalty
            grads.append(factors[n] @ inner_mat - w)
            if n == N - 1:
                gamma_full = gamma * grams[n]
                cross = float(np.sum(w * factors[n]))
        value = (0.5 * self.norm_sq - cross + 0.5 * float(np.sum(gamma_full))
                 + 0.5 * float(np.sum(multipliers * gamma_full))
                 + 0.25 * float(np.sum(penalty * gamma_full ** 2)))
        return value, grads

    def fun(self, multipliers, penalty) -> Callable:
        """Objective over the packed vector, in the form L-BFGS expects."""

        def f(x):
            factors = unpack(x, self.dims, self.rank).factors
            value, grads = self.value_and_grads(factors, multipliers, penalty)
            return value, np.concatenate([g.ravel(order="F") for g in grads])

        return f


def _check_state(a, s: AlmState):
    a = _arr(a)
    if tuple(a.shape) != s.factors.dims:
        raise ShapeError(f"tensor dims {a.shape} differ from factor dims {s.factors.dims}")
    R = s.factors.rank
    if s.multipliers.shape != (R, R) or s.penalty.shape != (R, R):
        raise ShapeError("multiplier and penalty matrices must be R x R")
    return a


def objective(a, s: AlmState) -> float:
    """Augmented Lagrangian value at the state's factors.

    ``F(v) + 1/2 sum_{s!=t} lambda_st g_st + 1/4 sum_{s!=t} c_st g_st^2`` with
    ``g_st = prod_n <v_s^(n), v_t^(n)>`` and ``F(v) = 1/2 ||a - [[V]]||^2``.
    """
    a = _check_state(a, s)
    value, _ = AugmentedLagrangian(a, s.factors.rank).value_and_grads(
        s.factors.factors, s.multipliers, s.penalty)
    return value


def gradient(a, s: AlmState) -> list[np.ndarray]:
    """Mode-wise gradient blocks, each of shape ``I_n x R``."""
    a = _check_state(a, s)
    _, grads = AugmentedLagrangian(a, s.factors.rank).value_and_grads(
        s.factors.factors, s.multipliers, s.penalty)
    return grads


def penalty_matrix(factors: KruskalTensor, mu: float, floor: float = 0.0) -> np.ndarray:
    """Per-pair penalty weights ``c_st = mu / (delta_s^2 delta_t^2)``, zero diagonal.

    Raises
    ------
    DegenerateComponentError
        If some ``delta_r = prod_n ||v_r^(n)||`` is at or below ``floor``.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    delta = component_norms(factors)
    bad = np.flatnonzero(delta <= floor)
    if bad.size:
        raise DegenerateComponentError(int(bad[0]))
    h = 1.0 / delta ** 2
    c = mu * np.outer(h, h)
    np.fill_diagonal(c, 0.0)
    return c


def update_multipliers(s: AlmState) -> np.ndarray:
    """``Lambda + C * (Hadamard product of the factor Grams)`` with zero diagonal."""
    new = s.multipliers + s.penalty * gram_hadamard(s.factors)
    np.fill_diagonal(new, 0.0)
    return new


def theta(factors: KruskalTensor) -> float:
    """Max over component pairs of the min over modes of ``|cos|`` between mode vectors."""
    R = factors.rank
    if R < 2:
        return 0.0
    cosines = []
    for n, f in enumerate(factors.factors):
        norms = np.linalg.norm(f, axis=0)
        bad = np.flatnonzero(norms == 0)
        if bad.size:
            raise DegenerateComponentError(int(bad[0]), f"component {int(bad[0])} has a zero vector in mode {n}")
        u = f / norms
        cosines.append(np.abs(u.T @ u))
    m = np.min(np.stack(cosines), axis=0)
    np.fill_diagonal(m, -np.inf)
    return float(min(np.max(m), 1.0))


def _projected_rerr(a, factors: KruskalTensor, norm_a: float) -> float:
    from .orthogonalize import orthogonalize, project

    ortho = project(a, orthogonalize(factors))
    resid_sq = max(norm_a ** 2 - float(np.sum(ortho.sigma ** 2)), 0.0)
    return float(np.sqrt(resid_sq) / norm_a)


def od_alm_fit(a, cfg: AlmConfig, init: KruskalTensor,
               callback: Optional[Callable[[AlmState, LbfgsReport], None]] = None):
    """Run the outer augmented Lagrangian loop.

    Parameters
    ----------
    a : DenseTensor or array_like
    cfg : AlmConfig
    init : KruskalTensor
        Starting factors (weights, if any, are folded into the first mode).
    callback : callable, optional
        Called as ``callback(state, report)`` after each subproblem solve.

    Returns
    -------
    factors : KruskalTensor
        Unweighted factors of the last subproblem; only approximately
        orthogonal.
    trace : RunTrace

    Raises
    ------
    DegenerateComponentError
        If a component norm falls below ``1e-12 * ||a||``.
    """
    a = _arr(a)
    if init.rank != cfg.rank:
        raise ShapeError(f"initialization has rank {init.rank}, config asks for {cfg.rank}")
    if init.dims != tuple(a.shape):
        raise ShapeError(f"initialization dims {init.dims} differ from tensor dims {a.shape}")
    factors = [f.copy() for f in init.factors]
    factors[0] = factors[0] * init.w
    current = KruskalTensor(factors)

    lagr = AugmentedLagrangian(a, cfg.rank)
    norm_a = float(np.sqrt(lagr.norm_sq))
    floor = DEGENERACY_FLOOR * norm_a
    inner_cfg = cfg.inner_config()
    state = AlmState.initial(current, cfg.mu0)
    trace = RunTrace()
    t0 = time.perf_counter()

    for k in range(1, cfg.max_outer + 1):
        start = rebalance(state.factors)
        penalty = penalty_matrix(start, state.mu, floor)
        x0 = pack(start)
        report = lbfgs_minimize(lagr.fun(state.multipliers, penalty), x0, inner_cfg)
        solved = unpack(report.x_final, a.shape, cfg.rank)

        state = AlmState(solved, state.multipliers, penalty, state.mu, k)
        state.multipliers = update_multipliers(state)
        if callback is not None:
            callback(state, report)

        th = theta(solved)
        rel = float(np.linalg.norm(report.x_final - x0) / np.linalg.norm(x0))
        rerr = _projected_rerr(a, solved, norm_a) if cfg.trace_rerr else float("nan")
        trace.append(th, rel, report.iterations, rerr, time.perf_counter() - t0,
                     mu=state.mu, penalty=penalty)
        log.debug("outer %d: theta=%.3e rel=%.3e inner=%d (%s) rerr=%.6f",
                  k, th, rel, report.iterations, report.stop_reason.value, rerr)

        state.mu *= cfg.mu_growth
        if th < cfg.eps_outer:
            trace.stop_reason = "tolerance"
            break
    else:
        trace.stop_reason = "max_outer"
    return state.factors, trace
