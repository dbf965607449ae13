"""L-BFGS with a Moré--Thuente strong-Wolfe line search.

The line search follows the MINPACK-2 ``dcsrch``/``dcstep`` safeguarded
interpolation scheme, written out as a plain loop instead of reverse
communication.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .exceptions import NonDescentError, OptimizationError

__all__ = [
    "LbfgsConfig",
    "LbfgsReport",
    "LineSearchResult",
    "StopReason",
    "more_thuente_search",
    "two_loop_direction",
    "lbfgs_minimize",
]

ObjectiveFn = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


@dataclass
class LbfgsConfig:
    """Settings for :func:`lbfgs_minimize` and :func:`more_thuente_search`."""

    memory: int = 20
    max_iters: int = 500
    rel_change_tol: float = 1e-8
    grad_per_entry_tol: float = 1e-4
    ls_ftol: float = 1e-4
    ls_gtol: float = 1e-2
    ls_step0: float = 1.0
    ls_max_iters: int = 20
    ls_xtol: float = 1e-15
    ls_stpmin: float = 1e-15
    ls_stpmax: float = 1e15
    rel_change_measure: str = "x"
    scale_first_step: bool = False

    def __post_init__(self):
        if not 0 < self.ls_ftol < self.ls_gtol < 1:
            raise ValueError("need 0 < ls_ftol < ls_gtol < 1")
        if self.memory < 1 or self.max_iters < 1 or self.ls_max_iters < 1:
            raise ValueError("memory and iteration caps must be >= 1")
        if min(self.rel_change_tol, self.grad_per_entry_tol, self.ls_step0) <= 0:
            raise ValueError("tolerances and the initial step must be positive")
        if self.rel_change_measure not in ("x", "f"):
            raise ValueError("rel_change_measure must be 'x' or 'f'")


class StopReason(str, enum.Enum):
    REL_CHANGE = "RelChange"
    GRAD_TOL = "GradTol"
    MAX_ITERS = "MaxIters"
    LINE_SEARCH_FAIL = "LineSearchFail"


@dataclass
class LbfgsReport:
    x_final: np.ndarray
    f_final: float
    grad_norm_final: float
    iterations: int
    stop_reason: StopReason
    evaluations: int = 0


class LineSearchResult(NamedTuple):
    step: float
    f: float
    g: np.ndarray
    evals: int
    converged: bool
    message: str


def _dcstep(stx, fx, dx, sty, fy, dy, stp, fp, dp, brackt, stpmin, stpmax):
    """One safeguarded step of the Moré--Thuente interval update."""
    sgnd = dp * math.copysign(1.0, dx)

    if fp > fx:
        # higher function value: minimizer is bracketed
        theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp
        s = max(abs(theta), abs(dx), abs(dp))
        gamma = s * math.sqrt(max(0.0, (theta / s) ** 2 - (dx / s) * (dp / s)))
        if stp < stx:
            gamma = -gamma
        p = (gamma - dx) + theta
        q = ((gamma - dx) + gamma) + dp
        stpc = stx + (p / q) * (stp - stx)
        stpq = stx + ((dx / ((fx - fp) / (stp - stx) + dx)) / 2.0) * (stp - stx)
        if abs(stpc - stx) < abs(stpq - stx):
            stpf = stpc
        else:
            stpf = stpc + (stpq - stpc) / 2.0
        brackt = True
    elif sgnd < 0.0:
        # derivatives of opposite sign: minimizer is bracketed
        theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp
        s = max(abs(theta), abs(dx), abs(dp))
        gamma = s * math.sqrt(max(0.0, (theta / s) ** 2 - (dx / s) * (dp / s)))
        if stp > stx:
            gamma = -gamma
        p = (gamma - dp) + theta
        q = ((gamma - dp) + gamma) + dx
        stpc = stp + (p / q) * (stx - stp)
        stpq = stp + (dp / (dp - dx)) * (stx - stp)
        stpf = stpc if abs(stpc - stp) > abs(stpq - stp) else stpq
        brackt = True
    elif abs(dp) < abs(dx):
        # same-sign derivatives, magnitude decreasing
        theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp
        s = max(abs(theta), abs(dx), abs(dp))
        gamma = s * math.sqrt(max(0.0, (theta / s) ** 2 - (dx / s) * (dp / s)))
        if stp > stx:
            gamma = -gamma
        p = (gamma - dp) + theta
        q = (gamma + (dx - dp)) + gamma
        r = p / q
        if r < 0.0 and gamma != 0.0:
            stpc = stp + r * (stx - stp)
        elif stp > stx:
            stpc = stpmax
        else:
            stpc = stpmin
        stpq = stp + (dp / (dp - dx)) * (stx - stp)
        if brackt:
            stpf = stpc if abs(stpc - stp) < abs(stpq - stp) else stpq
            if stp > stx:
                stpf = min(stp + 0.66 * (sty - stp), stpf)
            else:
                stpf = max(stp + 0.66 * (sty - stp), stpf)
        else:
            stpf = stpc if abs(stpc - stp) > abs(stpq - stp) else stpq
            stpf = min(stpmax, max(stpmin, stpf))
    else:
        # same-sign derivatives, magnitude not decreasing
        if brackt:
            theta = 3.0 * (fp - fy) / (sty - stp) + dy + dp
            s = max(abs(theta), abs(dy), abs(dp))
            gamma = s * math.sqrt(max(0.0, (theta / s) ** 2 - (dy / s) * (dp / s)))
            if stp > sty:
                gamma = -gamma
            p = (gamma - dp) + theta
            q = ((gamma - dp) + gamma) + dy
            stpf = stp + (p / q) * (sty - stp)
        elif stp > stx:
            stpf = stpmax
        else:
            stpf = stpmin

    if fp > fx:
        sty, fy, dy = stp, fp, dp
    else:
        if sgnd < 0.0:
            sty, fy, dy = stx, fx, dx
        stx, fx, dx = stp, fp, dp
    return stx, fx, dx, sty, fy, dy, stpf, brackt


def more_thuente_search(f: ObjectiveFn, x, d, cfg: LbfgsConfig | None = None, *,
                        f0: float | None = None, g0: np.ndarray | None = None,
                        step0: float | None = None) -> LineSearchResult:
    """Find a step along ``d`` satisfying the strong Wolfe conditions.

    Parameters
    ----------
    f : callable
        ``f(x) -> (value, gradient)``.
    x, d : ndarray
        Start point and search direction; ``d`` must be a descent direction.
    cfg : LbfgsConfig, optional
        Supplies ``ls_ftol``, ``ls_gtol``, ``ls_max_iters`` and step bounds.
    f0, g0 : optional
        Value and gradient at ``x`` if already known.
    step0 : float, optional
        First trial step (defaults to ``cfg.ls_step0``).

    Returns
    -------
    LineSearchResult
        On failure (``converged=False``) the lowest trial point seen is
        returned, which may not decrease ``f``.
    """
    cfg = cfg or LbfgsConfig()
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if f0 is None or g0 is None:
        f0, g0 = f(x)
    finit = float(f0)
    ginit = float(np.dot(g0, d))
    if not ginit < 0.0:
        raise NonDescentError(f"search direction is not a descent direction (d.g = {ginit:g})")

    ftol, gtol, xtol = cfg.ls_ftol, cfg.ls_gtol, cfg.ls_xtol
    stpmin, stpmax = cfg.ls_stpmin, cfg.ls_stpmax
    stp = min(max(cfg.ls_step0 if step0 is None else step0, stpmin), stpmax)

    xtrapl, xtrapu = 1.1, 4.0
    gtest = ftol * ginit
    width = stpmax - stpmin
    width1 = 2.0 * width
    brackt = False
    stage = 1
    stx, fx, gx = 0.0, finit, ginit
    sty, fy, gy = 0.0, finit, ginit
    stmin, stmax = 0.0, stp + xtrapu * stp

    best = (0.0, finit, np.asarray(g0, dtype=float))
    evals = 0
    message = "maximum line search iterations reached"
    converged = False
    while evals < cfg.ls_max_iters:
        fv, gv = f(x + stp * d)
        evals += 1
        fv = float(fv)
        if not np.isfinite(fv) or not np.all(np.isfinite(gv)):
            # overflow: back off towards the best bracketing point
            stp = stx + 0.5 * (stp - stx)
            message = "non-finite objective along the search direction"
            continue
        dg = float(np.dot(gv, d))
        if fv < best[1]:
            best = (stp, fv, gv)
        ftest = finit + stp * gtest
        if stage == 1 and fv <= ftest and dg >= 0.0:
            stage = 2

        if fv <= ftest and abs(dg) <= gtol * (-ginit):
            best = (stp, fv, gv)
            converged = True
            message = "strong Wolfe conditions satisfied"
            break
        if brackt and (stp <= stmin or stp >= stmax):
            message = "rounding errors prevent progress"
            break
        if brackt and stmax - stmin <= xtol * stmax:
            message = "interval of uncertainty below xtol"
            break
        if stp == stpmax and fv <= ftest and dg <= gtest:
            message = "step at upper bound"
            break
        if stp == stpmin and (fv > ftest or dg >= gtest):
            message = "step at lower bound"
            break

        if stage == 1 and fv <= fx and fv > ftest:
            # modified function keeps the interval updates well defined
            fm, gm = fv - stp * gtest, dg - gtest
            fxm, gxm = fx - stx * gtest, gx - gtest
            fym, gym = fy - sty * gtest, gy - gtest
            stx, fxm, gxm, sty, fym, gym, stp, brackt = _dcstep(
                stx, fxm, gxm, sty, fym, gym, stp, fm, gm, brackt, stmin, stmax)
            fx, gx = fxm + stx * gtest, gxm + gtest
            fy, gy = fym + sty * gtest, gym + gtest
        else:
            stx, fx, gx, sty, fy, gy, stp, brackt = _dcstep(
                stx, fx, gx, sty, fy, gy, stp, fv, dg, brackt, stmin, stmax)

        if brackt:
            if abs(sty - stx) >= 0.66 * width1:
                stp = stx + 0.5 * (sty - stx)
            width1 = width
            width = abs(sty - stx)
            stmin, stmax = min(stx, sty), max(stx, sty)
        else:
            stmin = stp + xtrapl * (stp - stx)
            stmax = stp + xtrapu * (stp - stx)
        stp = min(max(stp, stpmin), stpmax)
        if (brackt and (stp <= stmin or stp >= stmax)) or (
                brackt and stmax - stmin <= xtol * stmax):
            stp = stx

    step, fb, gb = best
    return LineSearchResult(step, fb, gb, evals, converged, message)


def two_loop_direction(g, pairs) -> np.ndarray:
    """L-BFGS search direction ``-H g`` from stored ``(s, y, 1/y.s)`` pairs."""
    q = -np.asarray(g, dtype=float)
    if not pairs:
        return q
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        q -= a * y
        alphas.append(a)
    s, y, _ = pairs[-1]
    q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def lbfgs_minimize(f: ObjectiveFn, x0, cfg: LbfgsConfig | None = None) -> LbfgsReport:
    """Minimize a smooth function with limited-memory BFGS.

    Stops when the relative change drops below ``rel_change_tol``, when
    ``||grad||_2 / len(x) < grad_per_entry_tol``, or at ``max_iters``. The
    relative change is ``||x_{j+1} - x_j|| / max(1, ||x_j||)`` by default and
    ``|f_j - f_{j+1}| / max(1, |f_j|)`` with ``rel_change_measure="f"``.

    Raises
    ------
    OptimizationError
        If the objective returns a non-finite value or gradient at an
        accepted point.
    """
    cfg = cfg or LbfgsConfig()
    x = np.array(x0, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise OptimizationError("starting point is not finite")
    size = x.size
    fx, g = f(x)
    fx = float(fx)
    evals = 1
    _check_finite(fx, g, 0)
    gnorm = float(np.linalg.norm(g))
    if gnorm / size < cfg.grad_per_entry_tol:
        return LbfgsReport(x, fx, gnorm, 0, StopReason.GRAD_TOL, evals)

    pairs: deque = deque(maxlen=cfg.memory)
    it = 0
    reason = StopReason.MAX_ITERS
    while it < cfg.max_iters:
        d = two_loop_direction(g, pairs)
        if not np.dot(d, g) < 0.0:
            pairs.clear()
            d = -g
        step0 = cfg.ls_step0
        if not pairs and cfg.scale_first_step:
            step0 *= min(1.0, 1.0 / gnorm)
        ls = more_thuente_search(f, x, d, cfg, f0=fx, g0=g, step0=step0)
        evals += ls.evals
        if not ls.converged and not ls.f < fx:
            if pairs:
                # retry once from a steepest-descent step with fresh memory
                pairs.clear()
                continue
            reason = StopReason.LINE_SEARCH_FAIL
            break
        it += 1
        s = ls.step * d
        x_new = x + s
        g_new = np.asarray(ls.g, dtype=float)
        _check_finite(ls.f, g_new, it)
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
        if cfg.rel_change_measure == "x":
            rel = np.linalg.norm(s) / max(1.0, np.linalg.norm(x))
        else:
            rel = abs(fx - ls.f) / max(1.0, abs(fx))
        x, fx, g = x_new, float(ls.f), g_new
        gnorm = float(np.linalg.norm(g))
        if gnorm / size < cfg.grad_per_entry_tol:
            reason = StopReason.GRAD_TOL
            break
        if rel < cfg.rel_change_tol:
            reason = StopReason.REL_CHANGE
            break
    return LbfgsReport(x, fx, gnorm, it, reason, evals)


def _check_finite(fx, g, it):
    if not np.isfinite(fx) or not np.all(np.isfinite(g)):
        raise OptimizationError(f"objective or gradient is not finite at iteration {it}")
