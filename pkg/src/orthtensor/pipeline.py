"""End-to-end decomposition drivers shared by the CLI and the benchmarks."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alm import AlmConfig, RunTrace, od_alm_fit
from .als import AlsConfig, als_fit
from .kruskal import KruskalTensor, relative_error
from .optimize import LbfgsConfig
from .orthogonalize import orthogonalize, project
from .tensor import _arr

__all__ = ["DecompositionResult", "default_tolerance", "run_cp_als", "run_od_alm", "decompose"]

LARGE_INPUT_ENTRIES = 10 ** 6


@dataclass
class DecompositionResult:
    method: str
    model: KruskalTensor
    trace: RunTrace
    rerr: float
    seconds: float
    iterations: int
    init_trace: Optional[RunTrace] = None
    raw_factors: Optional[KruskalTensor] = None


def default_tolerance(a) -> float:
    """1e-3 for inputs above a million entries, 1e-4 otherwise."""
    return 1e-3 if _arr(a).size > LARGE_INPUT_ENTRIES else 1e-4


def run_cp_als(a, rank: int, tol: float = 1e-8, max_iters: int = 500,
               seed: Optional[int] = 0) -> DecompositionResult:
    t0 = time.perf_counter()
    model, trace = als_fit(a, AlsConfig(rank, max_iters=max_iters, rel_fn_tol=tol, seed=seed))
    seconds = time.perf_counter() - t0
    return DecompositionResult("cp-als", model, trace, relative_error(a, model), seconds,
                               trace.iterations)


def run_od_alm(a, rank: int, eps_inner: Optional[float] = None, eps_outer: Optional[float] = None,
               max_outer: int = 25, mu0: float = 1.0, mu_growth: float = 10.0,
               init_tol: float = 1e-6, init_max_iters: int = 500,
               seed: Optional[int] = 0, inner: Optional[LbfgsConfig] = None,
               trace_rerr: bool = True) -> DecompositionResult:
    """CP-ALS start, augmented Lagrangian fit, orthogonalization and projection.

    The returned model carries the projection coefficients as weights and
    unit-norm factor columns.
    """
    a = _arr(a)
    eps_inner = default_tolerance(a) if eps_inner is None else eps_inner
    eps_outer = default_tolerance(a) if eps_outer is None else eps_outer
    t0 = time.perf_counter()
    init, init_trace = als_fit(a, AlsConfig(rank, max_iters=init_max_iters,
                                            rel_fn_tol=init_tol, seed=seed))
    extra = {} if inner is None else {"inner": inner}
    cfg = AlmConfig(rank, eps_outer=eps_outer, eps_inner=eps_inner, max_outer=max_outer,
                    mu0=mu0, mu_growth=mu_growth, trace_rerr=trace_rerr, **extra)
    raw, trace = od_alm_fit(a, cfg, init)
    final = project(a, orthogonalize(raw))
    model = final.to_kruskal()
    seconds = time.perf_counter() - t0
    return DecompositionResult("od-alm", model, trace, relative_error(a, model), seconds,
                               trace.iterations, init_trace, raw)


def decompose(a, method: str, rank: int, **kwargs) -> DecompositionResult:
    if method == "cp-als":
        return run_cp_als(a, rank, **kwargs)
    if method == "od-alm":
        return run_od_alm(a, rank, **kwargs)
    raise ValueError(f"unknown method {method!r}")
