"""Strictly convex quadratic subproblems over polytopes given by a linear
minimization oracle, solved with away-step Frank-Wolfe in floating point.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 10000

Oracle = Callable[[np.ndarray], np.ndarray]


@dataclass
class QuadraticSubproblem:
    """``min_y  a.y + (alpha/2) ||y - z||^2`` over the polytope behind ``lmo``.

    ``lmo(d)`` must return a vertex minimizing ``d.y``.
    """

    a: np.ndarray
    center: np.ndarray
    alpha: float
    lmo: Oracle

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("regularization weight must be positive")
        self.a = np.asarray(self.a, dtype=float)
        self.center = np.asarray(self.center, dtype=float)

    def value(self, y):
        r = y - self.center
        return float(self.a @ y + 0.5 * self.alpha * (r @ r))

    def gradient(self, y):
        return self.a + self.alpha * (y - self.center)


@dataclass
class QpResult:
    point: np.ndarray
    value: float
    gap: float
    iterations: int
    converged: bool


def _key(v):
    return tuple(np.round(v, 9))


def solve_qp_fw(sub: QuadraticSubproblem, tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER) -> QpResult:
    alpha = sub.alpha
    v0 = np.asarray(sub.lmo(sub.gradient(sub.center)), dtype=float)
    active = {_key(v0): [v0, 1.0]}
    x = v0.copy()
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = sub.gradient(x)
        s = np.asarray(sub.lmo(g), dtype=float)
        gap = float(g @ (x - s))
        if gap <= tol:
            return QpResult(x, sub.value(x), max(gap, 0.0), it, True)
        away_key, (v, wv) = max(active.items(), key=lambda kv: g @ kv[1][0])
        away_gap = float(g @ (v - x))
        if gap >= away_gap or len(active) == 1:
            d = s - x
            gmax = 1.0
            fw_step = True
        else:
            d = x - v
            gmax = wv / (1.0 - wv)
            fw_step = False
        dd = float(d @ d)
        if dd <= 0.0:
            break
        gamma = min(max(-float(g @ d) / (alpha * dd), 0.0), gmax)
        if fw_step:
            for item in active.values():
                item[1] *= 1.0 - gamma
            k = _key(s)
            if gamma >= 1.0:
                active = {k: [s, 1.0]}
            elif k in active:
                active[k][1] += gamma
            else:
                active[k] = [s, gamma]
        else:
            for item in active.values():
                item[1] *= 1.0 + gamma
            active[away_key][1] -= gamma
            if gamma >= gmax or active[away_key][1] <= 1e-15:
                del active[away_key]
        x = x + gamma * d
        # keep the iterate an exact combination of the active vertices
        if it % 50 == 0:
            tot = sum(w for _, w in active.values())
            for item in active.values():
                item[1] /= tot
            x = sum(w * vv for vv, w in active.values())
    return QpResult(x, sub.value(x), max(gap, 0.0), it, False)


def project_euclidean(lmo: Oracle, x, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER) -> QpResult:
    """Euclidean projection of ``x`` onto the polytope behind ``lmo``.

    ``tol`` bounds the distance to the exact projection: with weight 2 the
    objective gap dominates the squared distance, so the Frank-Wolfe gap is
    driven below ``tol**2``.
    """
    x = np.asarray(x, dtype=float)
    return solve_qp_fw(QuadraticSubproblem(np.zeros_like(x), x, 2.0, lmo), tol * tol, max_iter)
