"""Equilibrium-finding pipelines for flow games.

* multistart local descent on a gap function, followed by rounding and an
  exact equilibrium test;
* Gauss-Seidel best responses on integral profiles;
* the exhaustive oracle that minimizes the LP-duality reformulation over
  every integral profile.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .core import StrategyProfile
from .flowgame import (CdfgInstance, best_response_flow, is_feasible_profile, iter_integral_flows,
                       iter_joint_profiles, optimal_flows, quasi_linear_data, relaxed_joint_set_oracle,
                       solve_player_lp)
from .nikaido import (ALPHA, BETA, as_array, is_gne, penalty_factor, penalty_gradient,
                      regularized_gap, regularized_gradient, v_bar, v_bar_gradient)

GNE_FOUND = "gne_found"
NO_GNE = "no_gne_certified"
TIMEOUT = "timeout"
BUDGET = "budget_exhausted"

DESCENT_METHODS = ("vhat", "valpha", "vbar")
METHODS = DESCENT_METHODS + ("reformulation-exhaustive", "gauss-seidel")

EARLY_EXIT_VALUE = 1e-3
STALL_WINDOW = 300
STALL_GAIN = 1e-6
ENUM_CAP = 10 ** 6


@dataclass
class SolveConfig:
    method: str = "valpha"
    penalized: bool = False
    alpha: float = ALPHA
    beta: float = BETA
    c: float = 0.0
    starts: int = 100
    seed: int = 0
    time_limit: float = 60.0
    max_evals: int = 15000
    enum_cap: int = ENUM_CAP
    tol: float = 1e-6
    max_rounds: int = 1000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.method == "vbar" and not 0 < self.alpha < self.beta:
            raise ValueError("vbar needs 0 < alpha < beta")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.c < 0:
            raise ValueError("c must be nonnegative")
        if self.starts < 1 or self.max_evals < 1 or self.enum_cap < 1 or self.max_rounds < 1:
            raise ValueError("budgets must be positive")
        if self.time_limit < 0:
            raise ValueError("time limit must be nonnegative")


@dataclass
class StartTrace:
    index: int
    start_value: float
    final_value: float
    evaluations: int
    steps: int
    rounded: Optional[tuple]
    feasible: bool
    accepted: bool


@dataclass
class SolveResult:
    status: str
    profile: Optional[StrategyProfile]
    value: object
    starts_used: int = 0
    evaluations: int = 0
    trace: list = field(default_factory=list)
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.status == GNE_FOUND


def round_half_away(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.sign(X) * np.floor(np.abs(X) + 0.5)


def to_profile(X) -> StrategyProfile:
    return StrategyProfile([[int(v) for v in row] for row in np.asarray(X)])


def accept_rounded(inst: CdfgInstance, X) -> tuple:
    """Round and test exactly; returns ``(profile, feasible, is_equilibrium)``."""
    x = to_profile(round_half_away(as_array(inst, X)))
    feasible = is_feasible_profile(inst, x)
    return x, feasible, feasible and is_gne(inst, x)


# -- starting points ---------------------------------------------------------------


def random_starts(inst: CdfgInstance, count: int, seed: int = 0,
                  project: Optional[Callable] = None) -> list:
    """Uniform vectors on ``[0, max(n, d_1..d_n)]^k`` projected onto ``X^``."""
    if count < 1:
        raise ValueError("count must be positive")
    oracle = relaxed_joint_set_oracle(inst)
    if not oracle.is_feasible():
        raise ValueError("the relaxed joint set is empty")
    project = oracle.project_qp if project is None else project
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    raw = rng.uniform(0.0, float(inst.max_scale), size=(count, inst.n * inst.m))
    return [np.asarray(project(z), dtype=float).reshape(inst.n, inst.m) for z in raw]


# -- objectives and descent ---------------------------------------------------------


class GapObjective:
    """One of the gap functions as a value/gradient pair on ``(n, m)`` arrays."""

    def __init__(self, inst: CdfgInstance, method: str, alpha: float = ALPHA, beta: float = BETA,
                 c: float = 0.0, penalized: bool = False, tol: float = 1e-6):
        if method not in DESCENT_METHODS:
            raise ValueError(f"{method!r} is not a descent method")
        self.inst, self.method = inst, method
        self.alpha, self.beta, self.c = alpha, beta, c
        self.penalized, self.tol = penalized, tol
        self.oracle = relaxed_joint_set_oracle(inst)
        self.evaluations = 0
        self._last = None

    @property
    def constrained(self) -> bool:
        return self.method != "vbar"

    def project(self, X):
        return self.oracle.project_qp(np.ravel(X)).reshape(self.inst.n, self.inst.m)

    def _raw(self, X):
        inst = self.inst
        if self.method == "vbar":
            ev = v_bar(inst, X, self.alpha, self.beta, self.c, self.tol,
                       projector=self.oracle.project_qp)
        else:
            gamma = self.alpha if self.method == "valpha" else 0.0
            ev = regularized_gap(inst, X, gamma, tol=self.tol)
            if gamma:
                ev.value = max(ev.value, 0.0)
        return ev

    def __call__(self, X) -> float:
        X = np.asarray(X, dtype=float).reshape(self.inst.n, self.inst.m)
        ev = self._raw(X)
        self.evaluations += 1
        f = ev.value
        if self.penalized:
            f *= penalty_factor(X, self.inst.m, self.inst.n)
        self._last = (X.copy(), ev, f)
        return float(f)

    def gradient(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(self.inst.n, self.inst.m)
        if self._last is None or not np.array_equal(self._last[0], X):
            self(X)
        _, ev, _ = self._last
        inst = self.inst
        if self.method == "vbar":
            g = v_bar_gradient(inst, X, ev, self.alpha, self.beta, self.c)
        else:
            gamma = self.alpha if self.method == "valpha" else 0.0
            g = regularized_gradient(inst, X, ev, gamma)
        if self.penalized:
            p = penalty_factor(X, inst.m, inst.n)
            g = p * g + ev.value * penalty_gradient(X, inst.m, inst.n)
        return g


@dataclass
class DescentResult:
    point: np.ndarray
    value: float
    start_value: float
    evaluations: int
    steps: int
    reason: str


def local_descent(objective, start, budget: int = 15000, tol: float = 1e-8,
                  project: Optional[Callable] = None, early_exit: Optional[Callable] = None,
                  deadline: Optional[float] = None, seed: int = 0,
                  gradient: Optional[Callable] = None) -> DescentResult:
    """Projected gradient descent with Armijo backtracking.

    ``objective(x)`` returns a value; the gradient comes from ``gradient`` or
    ``objective.gradient``. When a backtracking search fails, random
    directions of shrinking radius are tried before giving up. ``early_exit``
    is consulted whenever the value drops below 1e-3. The descent also stops
    at value ``tol`` and when ``STALL_WINDOW`` evaluations gain less than a
    relative ``STALL_GAIN``.
    """
    grad = gradient or objective.gradient
    proj = project or (lambda z: z)
    rng = np.random.default_rng(seed)
    x = np.asarray(start, dtype=float)
    f = objective(x)
    evals = 1
    f0 = f
    steps = 0
    if early_exit is not None and f < EARLY_EXIT_VALUE and early_exit(x):
        return DescentResult(x, f, f0, evals, steps, "early-exit")
    t = None
    radius = 1.0
    reason = "budget"
    mark_f, mark_evals = f, evals

    def late():
        return deadline is not None and time.monotonic() > deadline

    while evals < budget:
        if late():
            reason = "deadline"
            break
        if f <= tol:
            reason = "optimal"
            break
        if evals - mark_evals >= STALL_WINDOW:
            # projections are only accurate to ~1e-9, so tiny gains are noise
            if mark_f - f <= STALL_GAIN * max(1.0, abs(mark_f)):
                reason = "stalled"
                break
            mark_f, mark_evals = f, evals
        g = grad(x)
        gn = float(np.max(np.abs(g))) if g.size else 0.0
        if t is None:
            t = 1.0 / max(gn, 1.0)
        moved = False
        s = t
        while gn > 0 and evals < budget and s * gn > tol and not late():
            xn = proj(x - s * g)
            d = xn - x
            if float(np.max(np.abs(d))) <= tol:
                break
            fn = objective(xn)
            evals += 1
            if fn <= f + 1e-4 * float(np.sum(g * d)):
                x, f = xn, fn
                moved = True
                t = 2.0 * s
                break
            s *= 0.5
        if not moved:
            # stand-in for gradient sampling: a few random probes around x
            for _ in range(4):
                if evals >= budget or late():
                    break
                r = rng.standard_normal(x.shape)
                r *= radius / max(float(np.linalg.norm(r)), 1e-300)
                xn = proj(x + r)
                fn = objective(xn)
                evals += 1
                if fn < f:
                    x, f = xn, fn
                    moved = True
                    break
            if moved:
                radius *= 1.5
            else:
                radius *= 0.5
                if radius < tol:
                    reason = "stationary"
                    break
        if moved:
            steps += 1
            if early_exit is not None and f < EARLY_EXIT_VALUE and early_exit(x):
                reason = "early-exit"
                break
    return DescentResult(x, f, f0, evals, steps, reason)


# -- multistart -------------------------------------------------------------------


def multistart_round(inst: CdfgInstance, cfg: SolveConfig, x0=None) -> SolveResult:
    """Descend from each start, round, and accept the first exact equilibrium.

    ``x0``, when given, is tried before the ``cfg.starts`` random starts.
    """
    if cfg.method not in DESCENT_METHODS:
        raise ValueError(f"multistart needs one of {DESCENT_METHODS}, not {cfg.method!r}")
    t0 = time.monotonic()
    deadline = t0 + cfg.time_limit
    if cfg.time_limit <= 0:
        return SolveResult(TIMEOUT, None, None, message="time limit reached before the first start")
    obj = GapObjective(inst, cfg.method, cfg.alpha, cfg.beta, cfg.c, cfg.penalized, cfg.tol)
    project = obj.project if obj.constrained else None
    starts = random_starts(inst, cfg.starts, cfg.seed, project=obj.oracle.project_qp)
    if x0 is not None:
        starts.insert(0, as_array(inst, x0))
    trace = []
    total = 0

    def early(X):
        return accept_rounded(inst, X)[2]

    for k, s in enumerate(starts):
        if time.monotonic() > deadline:
            return SolveResult(TIMEOUT, None, None, k, total, trace, "time limit reached")
        res = local_descent(obj, s, cfg.max_evals, project=project, early_exit=early,
                            deadline=deadline, seed=cfg.seed * 1_000_003 + k)
        total += res.evaluations
        x, feasible, ok = accept_rounded(inst, res.point)
        trace.append(StartTrace(k, res.start_value, res.value, res.evaluations, res.steps,
                                x.blocks, feasible, ok))
        if ok:
            return SolveResult(GNE_FOUND, x, 0, k + 1, total, trace)
    status = TIMEOUT if time.monotonic() > deadline else BUDGET
    return SolveResult(status, None, None, len(starts), total, trace, "no start produced an equilibrium")


# -- Gauss-Seidel -----------------------------------------------------------------


def gauss_seidel(inst: CdfgInstance, x0, max_rounds: int = 1000) -> SolveResult:
    """Cyclic exact best responses; a player moves only on strict improvement."""
    x = x0 if isinstance(x0, StrategyProfile) else StrategyProfile(x0)
    if not is_feasible_profile(inst, x):
        raise ValueError("the starting profile is not feasible")
    trace = []
    for r in range(1, max_rounds + 1):
        changed = False
        for i in range(inst.n):
            br = best_response_flow(inst, i, x.rivals(i))
            if br.status != "optimal":
                return SolveResult(BUDGET, x, None, r, trace=trace,
                                   message=f"player {i} has no feasible flow in round {r}")
            if inst.cost(i, x) > br.value:
                x = x.replace(i, br.flow)
                changed = True
        trace.append(x)
        if not changed:
            return SolveResult(GNE_FOUND, x, 0, r, trace=trace)
    return SolveResult(BUDGET, x, None, max_rounds, trace=trace, message="no quiet round within the budget")


# -- exhaustive reformulation oracle -------------------------------------------------


class EnumerationCapExceeded(RuntimeError):
    pass


def reformulation_objective(inst: CdfgInstance, x: StrategyProfile, nus) -> object:
    """``sum_i C_i(x_-i) . x_i - e_i(x_-i) . nu_i`` for given multipliers."""
    total = Fraction(0)
    for i in range(inst.n):
        q = quasi_linear_data(inst, i, x.rivals(i))
        total += sum(c * v for c, v in zip(q.C, x[i])) - sum(e * v for e, v in zip(q.e, nus[i]))
    return total


class _Responses:
    """Best-response values and cost vectors keyed by ``(player, rivals)``.

    Values come from exact integral min-cost flows; box-TDI makes them equal
    to the optimal values of the player LPs.
    """

    def __init__(self, inst):
        self.inst = inst
        self.store = {}

    def get(self, i, rivals):
        key = (i, rivals)
        hit = self.store.get(key)
        if hit is None:
            br = best_response_flow(self.inst, i, rivals)
            if br.status != "optimal":
                raise ValueError(f"player {i} has no flow at an integral feasible profile")
            hit = self.store[key] = (br.value, self.inst.cost_vector(i, rivals))
        return hit

    def gap(self, i, x):
        value, C = self.get(i, x.rivals(i))
        return sum(c * v for c, v in zip(C, x[i]) if v) - value


class _Walk:
    """Profile counter shared by both phases: enforces the cap and the deadline."""

    def __init__(self, cap, deadline):
        self.cap, self.deadline, self.count = cap, deadline, 0

    def step(self) -> bool:
        self.count += 1
        if self.count > self.cap:
            raise EnumerationCapExceeded(f"more than {self.cap} profiles visited; raise the cap to continue")
        return not (self.deadline is not None and self.count % 256 == 0 and time.monotonic() > self.deadline)


def _prefixes(inst: CdfgInstance):
    """Feasible flows of all players but the last, with the capacity they leave."""
    caps = list(inst.capacities)
    chosen = []

    def rec(i):
        if i == inst.n - 1:
            yield tuple(chosen), caps
            return
        for f in iter_integral_flows(inst, i, caps):
            for a in range(inst.m):
                caps[a] -= f[a]
            chosen.append(f)
            yield from rec(i + 1)
            chosen.pop()
            for a in range(inst.m):
                caps[a] += f[a]

    yield from rec(0)


def _zero_search(inst, resp, walk, stop_at_zero):
    """Zeros of the gap in lexicographic order, or None on timeout.

    A zero needs the last block to be a best response to the others, so only
    the last player's optimal face is walked for each prefix.
    """
    zeros = []
    last = inst.n - 1
    for prefix, _ in _prefixes(inst):
        if not walk.step():
            return None
        value, face = optimal_flows(inst, last, prefix)
        for y in face:
            if not walk.step():
                return None
            x = StrategyProfile(prefix + (y,))
            if all(resp.gap(i, x) == 0 for i in range(last)):
                zeros.append(x)
                if stop_at_zero:
                    return zeros
    return zeros


def solve_reformulation_exhaustive(inst: CdfgInstance, cap: int = ENUM_CAP, stop_at_zero: bool = True,
                                   time_limit: Optional[float] = None) -> SolveResult:
    """Minimize the reformulated objective with optimal duals over all of ``X``.

    With the multipliers set to the LP duals of every player's relaxed best
    response, the objective at an integral profile equals the convexified
    gap. A zero is an equilibrium; a positive minimum over the whole of ``X``
    certifies that none exists.

    Zeros are searched first, in lexicographic order; ``stop_at_zero`` ends
    the search at the first one, otherwise ``extra["zeros"]`` lists all of
    them. Only when there is none is every profile of ``X`` evaluated. ``cap``
    bounds the number of profiles visited over both phases.
    """
    deadline = None if time_limit is None else time.monotonic() + time_limit
    resp = _Responses(inst)
    walk = _Walk(cap, deadline)
    zeros = _zero_search(inst, resp, walk, stop_at_zero)
    if zeros is None:
        return SolveResult(TIMEOUT, None, None, message=f"time limit after {walk.count} profiles",
                           extra={"profiles": walk.count, "zeros": []})
    best, best_x = (0, zeros[0]) if zeros else (None, None)
    if not zeros:
        for x in iter_joint_profiles(inst):
            if not walk.step():
                return SolveResult(TIMEOUT, best_x, best, message=f"time limit after {walk.count} profiles",
                                   extra={"profiles": walk.count, "zeros": []})
            value = sum(resp.gap(i, x) for i in range(inst.n))
            if best is None or value < best:
                best, best_x = value, x
    extra = {"profiles": walk.count, "zeros": zeros}
    if best_x is None:
        return SolveResult(NO_GNE, None, None, message="the joint strategy set is empty", extra=extra)
    lps = [solve_player_lp(inst, i, best_x.rivals(i)) for i in range(inst.n)]
    nus = tuple(lp.nu for lp in lps)
    extra["duals"] = nus
    extra["objective"] = reformulation_objective(inst, best_x, nus)
    if extra["objective"] != best:
        raise ArithmeticError("reformulated objective disagrees with the best-response gap")
    if best == 0:
        return SolveResult(GNE_FOUND, best_x, best, extra=extra)
    return SolveResult(NO_GNE, best_x, best, message=f"minimum convexified gap {best} > 0", extra=extra)


def solve(inst: CdfgInstance, cfg: SolveConfig, x0=None) -> SolveResult:
    """Dispatch on ``cfg.method``."""
    if cfg.method in DESCENT_METHODS:
        return multistart_round(inst, cfg, x0)
    if cfg.method == "gauss-seidel":
        from .flowgame import any_joint_profile

        x0 = any_joint_profile(inst) if x0 is None else x0
        if x0 is None:
            return SolveResult(NO_GNE, None, None, message="the joint strategy set is empty")
        return gauss_seidel(inst, x0, cfg.max_rounds)
    return solve_reformulation_exhaustive(inst, cfg.enum_cap, time_limit=cfg.time_limit or None)


__all__ = [
    "GNE_FOUND", "NO_GNE", "TIMEOUT", "BUDGET", "METHODS", "DESCENT_METHODS", "SolveConfig",
    "SolveResult", "StartTrace", "round_half_away", "to_profile", "accept_rounded", "random_starts",
    "GapObjective", "DescentResult", "local_descent", "multistart_round", "gauss_seidel",
    "EnumerationCapExceeded", "reformulation_objective", "solve_reformulation_exhaustive", "solve",
]
