"""Nikaido-Isoda machinery: Psi, V^, the convexified V^, the regularized
V^_alpha, the unconstrained V-bar_{alpha,beta}, the integrality penalizer and
the equilibrium test.

Exact evaluations return rationals. The regularized functions work in floating
point on flow games and report the Frank-Wolfe gap they were solved to.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .core import FiniteGnep, StrategyProfile, check_dims, is_feasible
from .flowgame import (CdfgInstance, PlayerRegion, best_response_flow, in_relaxed_set,
                       is_feasible_profile, relaxed_joint_set_oracle,
                       solve_player_lp)
from .optim.hull import hull_membership
from .optim.qp import QuadraticSubproblem, project_euclidean, solve_qp_fw

ORIGINAL = "original"
CONVEXIFIED = "convexified"
ALPHA = 0.02
BETA = 0.05
QP_TOL = 1e-6
CAPACITY_SLACK = 1e-7


class InfeasibleProfile(ValueError):
    pass


@dataclass
class NiEvaluation:
    value: object
    responses: tuple
    method: str
    terms: tuple = ()
    duals: Optional[tuple] = None
    multipliers: Optional[tuple] = None
    gap: float = 0.0
    converged: bool = True
    extra: dict = field(default_factory=dict)


class ConvexifiedGame:
    """Quasi-linear convexification of a flow game or a finite table game.

    Strategy sets become convex hulls: the LP region of the flow polytope
    slice for a CDFG, ``conv`` of the table points for a ``FiniteGnep``. The
    cost ``phi_i(x) = C_i(x_-i) . x_i`` is its own convex envelope, so a
    second convexification changes nothing and returns an equivalent game.
    """

    def __init__(self, base):
        if isinstance(base, ConvexifiedGame):
            base = base.base
        if isinstance(base, FiniteGnep) and base.cost_vector is None:
            raise ValueError("a finite game needs a linear cost-vector oracle to be convexified")
        if not isinstance(base, (FiniteGnep, CdfgInstance)):
            raise TypeError(f"cannot convexify {type(base).__name__}")
        self.base = base

    @property
    def n(self):
        return self.base.n

    @property
    def dims(self):
        return self.base.dims

    @property
    def is_flow(self) -> bool:
        return isinstance(self.base, CdfgInstance)

    def cost_vector(self, i, rivals):
        return self.base.cost_vector(i, tuple(rivals))

    def cost(self, i, x):
        x = _profile(self, x)
        return sum(c * v for c, v in zip(self.cost_vector(i, x.rivals(i)), x[i]))

    def best_response(self, i, rivals):
        """Exact ``(value, y_i, nu_i)`` of the linear program over the hull."""
        rivals = tuple(rivals)
        if self.is_flow:
            lp = solve_player_lp(self.base, i, rivals)
            if lp.value is None:
                raise InfeasibleProfile(f"player {i} has an empty convexified strategy set")
            return lp.value, lp.flow, lp.nu
        pts = sorted(self.base.strategies(i, rivals))
        if not pts:
            raise InfeasibleProfile(f"player {i} has no strategies against {rivals}")
        C = self.cost_vector(i, rivals)
        best = min(pts, key=lambda p: (sum(c * v for c, v in zip(C, p)), p))
        return sum(c * v for c, v in zip(C, best)), best, None

    def contains(self, x) -> bool:
        x = _profile(self, x)
        if self.is_flow:
            return in_relaxed_set(self.base, x)
        for i in range(self.n):
            pts = self.base.strategies(i, x.rivals(i))
            if not pts or not hull_membership(x[i], sorted(pts)):
                return False
        return True

    @cached_property
    def joint_oracle(self):
        if not self.is_flow:
            raise TypeError("the relaxed joint set is defined for flow games")
        return relaxed_joint_set_oracle(self.base)

    def __repr__(self):
        return f"ConvexifiedGame({self.base!r})"


def convexify(game) -> ConvexifiedGame:
    return ConvexifiedGame(game)


def _profile(game, x) -> StrategyProfile:
    x = x if isinstance(x, StrategyProfile) else StrategyProfile(x)
    check_dims(game.dims, x)
    return x


def psi(game, x, y):
    """``sum_i [pi_i(x) - pi_i(y_i, x_-i)]`` evaluated exactly."""
    x, y = _profile(game, x), _profile(game, y)
    return sum(game.cost(i, x) - game.cost(i, x.replace(i, y[i])) for i in range(game.n))


def _feasible(game, x) -> bool:
    if isinstance(game, ConvexifiedGame):
        return game.contains(x)
    if isinstance(game, CdfgInstance):
        return is_feasible_profile(game, x)
    return is_feasible(game, x)


def v_hat(game, x, mode: str = ORIGINAL) -> NiEvaluation:
    """Supremum of Psi over feasible deviations, computed player by player."""
    x = _profile(game, x)
    if mode not in (ORIGINAL, CONVEXIFIED):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == CONVEXIFIED or isinstance(game, ConvexifiedGame):
        cg = convexify(game)
        terms, ys, nus = [], [], []
        for i in range(cg.n):
            val, y, nu = cg.best_response(i, x.rivals(i))
            terms.append(cg.cost(i, x) - val)
            ys.append(y)
            nus.append(nu)
        return NiEvaluation(sum(terms), tuple(ys), "vhat-" + CONVEXIFIED, tuple(terms),
                            duals=tuple(nus) if cg.is_flow else None)
    if not _feasible(game, x):
        raise InfeasibleProfile(f"{x} is not feasible")
    terms, ys = [], []
    for i in range(game.n):
        rivals = x.rivals(i)
        if isinstance(game, CdfgInstance):
            br = best_response_flow(game, i, rivals)
            if br.status != "optimal":
                raise InfeasibleProfile(f"player {i} has no feasible flow")
            val, y = br.value, br.flow
        else:
            pts = sorted(game.strategies(i, rivals))
            if not pts:
                raise InfeasibleProfile(f"player {i} has no strategies against {rivals}")
            val, y = min((game.cost(i, x.replace(i, p)), p) for p in pts)
        terms.append(game.cost(i, x) - val)
        ys.append(y)
    return NiEvaluation(sum(terms), tuple(ys), "vhat-" + ORIGINAL, tuple(terms))


def is_gne(game, x, tol=0) -> bool:
    try:
        x = _profile(game, x)
        if not _feasible(game, x):
            return False
        return v_hat(game, x, ORIGINAL).value <= tol
    except InfeasibleProfile:
        return False


# -- floating-point evaluations on flow games -------------------------------------


def _flow_game(game) -> CdfgInstance:
    base = game.base if isinstance(game, ConvexifiedGame) else game
    if not isinstance(base, CdfgInstance):
        raise TypeError("this evaluation is implemented for flow games")
    return base


def as_array(inst: CdfgInstance, x) -> np.ndarray:
    if isinstance(x, StrategyProfile):
        x = [[float(v) for v in b] for b in x]
    X = np.asarray(x, dtype=float)
    if X.size != inst.n * inst.m:
        raise ValueError(f"expected {inst.n}x{inst.m} coordinates, got {X.size}")
    return X.reshape(inst.n, inst.m)


def regularized_gap(inst: CdfgInstance, X: np.ndarray, gamma: float, region: Optional[np.ndarray] = None,
                    tol: float = QP_TOL) -> NiEvaluation:
    """``max_y sum_i [phi_i(x) - phi_i(y_i, x_-i) - gamma/2 |x_i - y_i|^2]``.

    The maximization runs over the jointly convex slices at ``region``
    (default ``x``). ``gamma = 0`` gives the convexified V^ via plain LPs.
    """
    region = X if region is None else region
    C = inst.cost_vectors_float(X)
    total = region.sum(axis=0)
    # slack absorbs the infeasibility of numerically projected points
    caps = np.asarray(inst.capacities, dtype=float) + CAPACITY_SLACK
    ys, terms, mus = [], [], []
    gap, ok = 0.0, True
    for i in range(inst.n):
        oracle = PlayerRegion(inst, i, caps - (total - region[i]))
        phi = float(C[i] @ X[i])
        if gamma == 0:
            y = oracle(C[i])
            q = float(C[i] @ y)
            g = C[i]
        else:
            res = solve_qp_fw(QuadraticSubproblem(C[i], X[i], gamma, oracle), tol)
            y, q = res.point, res.value
            gap += res.gap
            ok = ok and res.converged
            g = C[i] + gamma * (y - X[i])
        ys.append(y)
        terms.append(phi - q)
        mus.append(oracle.upper_multipliers(g))
    return NiEvaluation(float(sum(terms)), tuple(ys), f"gap[{gamma}]", tuple(terms),
                        multipliers=tuple(mus), gap=gap, converged=ok)


def regularized_gradient(inst: CdfgInstance, X: np.ndarray, ev: NiEvaluation, gamma: float,
                         with_multipliers: bool = True) -> np.ndarray:
    """Envelope gradient of ``regularized_gap`` at its computed maximizers.

    Differentiates the objective at the fixed maximizer ``y``; the capacity
    multipliers account for the slices moving with the rival load.
    """
    D, _ = inst.interaction_arrays
    C = inst.cost_vectors_float(X)
    Y = np.asarray(ev.responses)
    W = np.einsum("kab,kb->ka", D, X - Y)
    if with_multipliers:
        W = W - np.asarray(ev.multipliers)
    return C - gamma * (X - Y) + W.sum(axis=0)[None, :] - W


def v_alpha(game, x, alpha: float = ALPHA, tol: float = QP_TOL) -> NiEvaluation:
    """Regularized gap over the slices at ``x``; ``x`` must lie in the relaxed set."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if isinstance(game, ConvexifiedGame) and not game.is_flow:
        return _v_alpha_table(game, _profile(game, x), alpha, tol)
    inst = _flow_game(game)
    X = as_array(inst, x)
    ev = regularized_gap(inst, X, alpha, tol=tol)
    # x_i itself is feasible, so every term is nonnegative up to the solver gap
    ev.terms = tuple(max(t, 0.0) for t in ev.terms)
    ev.value = float(sum(ev.terms))
    ev.method = "valpha"
    return ev


def _v_alpha_table(cg: ConvexifiedGame, x: StrategyProfile, alpha, tol) -> NiEvaluation:
    ys, terms = [], []
    gap, ok = 0.0, True
    for i in range(cg.n):
        rivals = x.rivals(i)
        pts = np.array(sorted(cg.base.strategies(i, rivals)), dtype=float)
        if not len(pts):
            raise InfeasibleProfile(f"player {i} has no strategies against {rivals}")
        C = np.array([float(c) for c in cg.cost_vector(i, rivals)])
        xi = np.array([float(v) for v in x[i]])
        res = solve_qp_fw(QuadraticSubproblem(C, xi, alpha, lambda d, P=pts: P[int(np.argmin(P @ d))]), tol)
        gap += res.gap
        ok = ok and res.converged
        ys.append(res.point)
        terms.append(max(float(C @ xi) - res.value, 0.0))
    return NiEvaluation(float(sum(terms)), tuple(ys), "valpha", tuple(terms), gap=gap, converged=ok)


def v_bar(game, x, alpha: float = ALPHA, beta: float = BETA, c: float = 0.0,
          tol: float = QP_TOL, projector=None) -> NiEvaluation:
    """Unconstrained ``V_alpha - V_beta + c |x - P[x]|^2`` with slices taken at ``P[x]``.

    ``P`` is the Frank-Wolfe projection onto the relaxed joint set unless a
    ``projector`` mapping a flat vector to its projection is given.
    """
    if not 0 < alpha < beta:
        raise ValueError("need 0 < alpha < beta")
    if c < 0:
        raise ValueError("c must be nonnegative")
    cg = convexify(game)
    inst = _flow_game(cg)
    X = as_array(inst, x)
    if projector is None:
        proj = project_euclidean(cg.joint_oracle, X.ravel(), tol)
        P, pgap, pok = proj.point.reshape(X.shape), proj.gap, proj.converged
    else:
        P, pgap, pok = np.asarray(projector(X.ravel()), dtype=float).reshape(X.shape), 0.0, True
    ea = regularized_gap(inst, X, alpha, region=P, tol=tol)
    eb = regularized_gap(inst, X, beta, region=P, tol=tol)
    value = ea.value - eb.value + c * float(np.sum((X - P) ** 2))
    return NiEvaluation(value, ea.responses, "vbar", gap=ea.gap + eb.gap + pgap,
                        converged=ea.converged and eb.converged and pok,
                        extra={"projection": P, "alpha_eval": ea, "beta_eval": eb})


def v_bar_gradient(inst: CdfgInstance, X: np.ndarray, ev: NiEvaluation, alpha: float = ALPHA,
                   beta: float = BETA, c: float = 0.0) -> np.ndarray:
    """Gradient of ``v_bar`` with the projected slices held fixed."""
    ga = regularized_gradient(inst, X, ev.extra["alpha_eval"], alpha, with_multipliers=False)
    gb = regularized_gradient(inst, X, ev.extra["beta_eval"], beta, with_multipliers=False)
    return ga - gb + 2.0 * c * (X - ev.extra["projection"])


def penalty_factor(x, m: int, n: int) -> float:
    """``1 + (1/(m n)) sum sin(pi x)^2``; exactly 1 on integral points."""
    if isinstance(x, StrategyProfile):
        flat = [float(v) for v in x.flat()]
    else:
        flat = np.asarray(x, dtype=float).ravel().tolist()
    s = sum(math.sin(math.pi * v) ** 2 for v in flat if not float(v).is_integer())
    return 1.0 + s / (m * n)


def penalty_gradient(X: np.ndarray, m: int, n: int) -> np.ndarray:
    return (math.pi / (m * n)) * np.sin(2 * math.pi * X)
