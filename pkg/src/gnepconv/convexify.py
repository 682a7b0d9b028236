"""Structural checks on finite-strategy GNEPs.

The checkers decide whether a game admits a jointly constrained
(``check_k_restrictive_closed``) or a jointly convex
(``check_restrictive_closed``) convexification. Every ``fails`` verdict
carries a witness that can be re-verified with ``hull_membership``.
"""
from __future__ import annotations

import itertools
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .core import FiniteGnep, StrategyProfile, as_block, assemble, refined_domain
from .flowgame import CdfgInstance, iter_integral_flows
from .optim.hull import hull_membership
from .optim.lp import EQ, LinearProgram, solve_lp

HOLDS = "holds"
FAILS = "fails"
UNDECIDED = "undecided"

EXACT_SLICE_DIM = 2
DEFAULT_SAMPLES = 200


@dataclass(frozen=True)
class Witness:
    """A violation found at player ``i`` with rival profile ``rivals``.

    For the k-check ``point`` lies in the prescribed slice of player ``i``
    at ``x_{-j} = rivals`` but outside ``conv(X_j(x_{-j}))``. For the
    convex-hull check ``j`` is None and ``point`` is an extreme point of the
    slice of ``conv(S)`` at ``x_{-i} = rivals`` that is not in ``S_i``.
    """

    i: int
    j: Optional[int]
    rivals: tuple
    point: StrategyProfile

    @property
    def player(self) -> int:
        return self.i if self.j is None else self.j


@dataclass
class CheckReport:
    verdict: str
    witness: Optional[Witness] = None
    method: str = ""
    evidence: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS


@dataclass(frozen=True)
class CompleteStrategySet:
    per_player: tuple
    union: frozenset


def complete_strategy_sets(game: FiniteGnep) -> CompleteStrategySet:
    per = []
    for i in range(game.n):
        s = frozenset(assemble(i, b, key) for key in refined_domain(game, i)
                      for b in game.strategies(i, key))
        per.append(s)
    return CompleteStrategySet(tuple(per), frozenset().union(*per) if per else frozenset())


def prescribed_slice(game: FiniteGnep, i: int, j: int, x_minus_j: Sequence) -> set:
    """Blocks ``x_j`` with ``(x_j, x_{-j})`` in the prescribed set of player ``i``.

    For ``i == j`` this is ``X_j(x_{-j})`` when ``x_{-j}`` is in the refined
    domain of player ``j`` and empty otherwise.
    """
    x_minus_j = tuple(as_block(b) for b in x_minus_j)
    if i == j:
        if x_minus_j in refined_domain(game, j):
            return set(game.strategies(j, x_minus_j))
        return set()
    own = x_minus_j[i if i < j else i - 1]
    out = set()
    for key in refined_domain(game, i):
        x = assemble(i, own, key)
        if x.rivals(j) != x_minus_j:
            continue
        if hull_membership(own, sorted(game.strategies(i, key))):
            out.add(x[j])
    return out


def _map(fn, items, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def check_k_restrictive_closed(game: FiniteGnep, workers: int = 1) -> CheckReport:
    """Compare prescribed slices against ``conv(X_j(x_{-j}))`` on the refined domain."""
    tasks = [(j, key) for j in range(game.n) for key in sorted(refined_domain(game, j))]

    def run(task):
        j, key = task
        hull = sorted(game.strategies(j, key))
        checked = 0
        for i in range(game.n):
            if i == j:
                continue
            for b in sorted(prescribed_slice(game, i, j, key)):
                checked += 1
                if not hull_membership(b, hull):
                    return Witness(i, j, key, assemble(j, b, key)), checked
        return None, checked

    results = _map(run, tasks, workers)
    total = 0
    for w, checked in results:
        total += checked
        if w is not None:
            return CheckReport(FAILS, w, "prescribed-slices", {"slices": len(tasks), "points": total})
    return CheckReport(HOLDS, None, "prescribed-slices", {"slices": len(tasks), "points": total})


# -- slices of conv(S) ------------------------------------------------------


class _HullSlice:
    """Support oracle of ``{y : (y, x_{-i}) in conv(S)}`` via exact LPs."""

    def __init__(self, points: Sequence[StrategyProfile], i: int, rivals: tuple):
        self.own = [p[i] for p in points]
        rest = [tuple(c for b in p.rivals(i) for c in b) for p in points]
        target = tuple(c for b in rivals for c in b)
        self.rows = [[r[d] for r in rest] for d in range(len(target))] + [[1] * len(points)]
        self.rhs = list(target) + [1]
        self.k = len(self.own[0])
        self.solves = 0

    def _point(self, lam):
        return tuple(sum((lam[s] * self.own[s][d] for s in range(len(lam))), Fraction(0))
                     for d in range(self.k))

    def vertex(self, directions: Sequence[Sequence]):
        """Lexicographic maximizer: ``directions[0]`` first, ties by the next ones."""
        rows, rhs = list(self.rows), list(self.rhs)
        lam = None
        for d in directions:
            c = [sum(Fraction(d[t]) * o[t] for t in range(self.k)) for o in self.own]
            sol = solve_lp(LinearProgram(c, rows, rhs, EQ, lower=[0] * len(c), maximize=True))
            self.solves += 1
            if not sol.optimal:
                return None
            lam = sol.x
            rows = rows + [c]
            rhs = rhs + [sol.objective]
        return tuple(int(v) if v.denominator == 1 else v for v in self._point(lam))

    def support(self, d):
        c = [sum(Fraction(d[t]) * o[t] for t in range(self.k)) for o in self.own]
        sol = solve_lp(LinearProgram(c, self.rows, self.rhs, EQ, lower=[0] * len(c), maximize=True))
        self.solves += 1
        return sol.objective


def _dot(a, b):
    return sum(Fraction(x) * y for x, y in zip(a, b))


def slice_vertices(sl: _HullSlice) -> list:
    """All vertices of a slice of dimension at most two, in sorted order."""
    if sl.k == 1:
        return sorted({sl.vertex([(1,)]), sl.vertex([(-1,)])})
    if sl.k != 2:
        raise ValueError("exact slice enumeration needs block dimension <= 2")
    a = sl.vertex([(1, 0), (0, 1)])
    b = sl.vertex([(-1, 0), (0, -1)])
    if a == b:
        return [a]
    found = {a, b}

    def wrap(p, q):
        # outward normal of the directed edge p -> q (hull traversed clockwise)
        n = (q[1] - p[1], p[0] - q[0])
        if sl.support(n) == _dot(n, p):
            return
        r = sl.vertex([n, (q[0] - p[0], q[1] - p[1])])
        if r in found:
            return
        found.add(r)
        wrap(p, r)
        wrap(r, q)

    wrap(a, b)
    wrap(b, a)
    return sorted(found)


def _slice_tasks(game: FiniteGnep):
    return [(i, key) for i in range(game.n) for key in sorted(refined_domain(game, i))]


def check_restrictive_closed(game: FiniteGnep, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                             workers: int = 1) -> CheckReport:
    """Extreme points of every slice of ``conv(S)`` must lie in ``S_i``.

    Exact when every block has dimension at most two. Larger blocks are
    first tried against the 0/1 sufficient condition; failing that, random
    lexicographic directions sample slice vertices and only a violation is
    conclusive.
    """
    if game.n == 0:
        return CheckReport(HOLDS, None, "empty")
    points = sorted(complete_strategy_sets(game).union)
    exact = all(k <= EXACT_SLICE_DIM for k in game.dims)
    if not exact and check_zero_one_sufficiency(game):
        return CheckReport(HOLDS, None, "extreme-projections")
    tasks = _slice_tasks(game)

    def run(task):
        i, key = task
        sl = _HullSlice(points, i, key)
        own = game.strategies(i, key)
        if exact:
            verts = slice_vertices(sl)
        else:
            rng = random.Random(f"{seed}:{i}:{key}")
            per_slice = max(1, samples // max(1, len(tasks)))
            verts = []
            for _ in range(per_slice):
                dirs = [[rng.randint(-1000, 1000) for _ in range(sl.k)] for _ in range(sl.k)]
                v = sl.vertex(dirs)
                if v is not None:
                    verts.append(v)
            verts = sorted(set(verts))
        for v in verts:
            if v not in own:
                return Witness(i, None, key, assemble(i, v, key)), len(verts), sl.solves
        return None, len(verts), sl.solves

    results = _map(run, tasks, workers)
    n_verts = n_lp = 0
    for w, nv, ns in results:
        n_verts += nv
        n_lp += ns
        if w is not None:
            method = "slice-vertices" if exact else "sampled-vertices"
            return CheckReport(FAILS, w, method, {"slices": len(tasks), "vertices": n_verts, "lp_solves": n_lp})
    if exact:
        return CheckReport(HOLDS, None, "slice-vertices",
                           {"slices": len(tasks), "vertices": n_verts, "lp_solves": n_lp})
    return CheckReport(UNDECIDED, None, "sampled-vertices",
                       {"slices": len(tasks), "vertices": n_verts, "lp_solves": n_lp, "seed": seed})


def is_pseudo_jointly_constrained(game: FiniteGnep) -> bool:
    union = complete_strategy_sets(game).union
    for i in range(game.n):
        for key in refined_domain(game, i):
            sliced = {x[i] for x in union if x.rivals(i) == key}
            if sliced != set(game.strategies(i, key)):
                return False
    return True


def check_zero_one_sufficiency(game: FiniteGnep) -> bool:
    """Pseudo jointly constrained with all-extreme projections of ``S``."""
    if not is_pseudo_jointly_constrained(game):
        return False
    union = complete_strategy_sets(game).union
    for i in range(game.n):
        proj = sorted({x[i] for x in union})
        for k, p in enumerate(proj):
            rest = proj[:k] + proj[k + 1:]
            if rest and hull_membership(p, rest):
                return False
    return True


def verify_witness(game: FiniteGnep, report: CheckReport) -> bool:
    """Re-check a ``fails`` witness from scratch."""
    w = report.witness
    if w is None:
        return False
    x = w.point
    if w.j is not None:
        if x.rivals(w.j) != w.rivals:
            return False
        return (x[w.j] in prescribed_slice(game, w.i, w.j, w.rivals)
                and not hull_membership(x[w.j], sorted(game.strategies(w.j, w.rivals))))
    if x.rivals(w.i) != w.rivals or x[w.i] in game.strategies(w.i, w.rivals):
        return False
    points = [p.flat() for p in complete_strategy_sets(game).union]
    if not hull_membership(x.flat(), points):
        return False
    sl = _HullSlice(sorted(complete_strategy_sets(game).union), w.i, w.rivals)
    if sl.k <= EXACT_SLICE_DIM:
        return x[w.i] in slice_vertices(sl)
    return True


# -- flow games as finite games ---------------------------------------------


def finite_game(inst: CdfgInstance, name: str = "") -> FiniteGnep:
    """Tabulate the integral strategy sets of a (small) flow game."""
    own = [list(iter_integral_flows(inst, i, inst.capacities)) for i in range(inst.n)]
    tables = []
    for i in range(inst.n):
        t = {}
        rival_lists = [own[j] for j in range(inst.n) if j != i]
        for key in itertools.product(*rival_lists):
            residual = inst.residual(i, key)
            if any(r < 0 for r in residual):
                continue
            flows = list(iter_integral_flows(inst, i, residual))
            if flows:
                t[key] = flows
        tables.append(t)
    return FiniteGnep(inst.dims, tables, inst.cost, inst.cost_vector, name or "cdfg")
