"""Capacitated discrete flow games (CDFG).

Each player routes an integral demand from its source to its sink through a
network whose arc capacities are shared by all players. Player ``i`` pays
``C_i(x_-i) . x_i`` where ``C_i(x_-i) = D_i^T L + g_i`` is affine in the rival
load ``L = sum_{j != i} x_j``:

* bilinear costs: ``D_i = C1_i`` and ``g_i = C2_i``;
* congestion costs: ``D_i = diag(w_i)`` and ``g_i = w_i``.
"""
from __future__ import annotations

import dataclasses
import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import StrategyProfile, assemble
from .optim.lp import EQ, LE, LinearProgram, LpSolution, solve_lp

BILINEAR = "bilinear"
CONGESTION = "congestion"


@dataclass(frozen=True)
class Player:
    source: object
    sink: object
    demand: int


@dataclass(frozen=True, eq=True)
class CdfgInstance:
    nodes: tuple
    arcs: tuple
    capacities: tuple
    players: tuple
    cost_kind: str
    c1: Optional[tuple] = None
    c2: Optional[tuple] = None
    congestion: Optional[tuple] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        conv = object.__setattr__
        conv(self, "nodes", tuple(self.nodes))
        conv(self, "arcs", tuple(tuple(a) for a in self.arcs))
        conv(self, "capacities", tuple(int(c) for c in self.capacities))
        conv(self, "players", tuple(p if isinstance(p, Player) else Player(*p) for p in self.players))
        m, n = len(self.arcs), len(self.players)
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node labels")
        known = set(self.nodes)
        for a in self.arcs:
            if len(a) != 2 or a[0] not in known or a[1] not in known:
                raise ValueError(f"arc {a} references unknown nodes")
        if len(self.capacities) != m:
            raise ValueError(f"{len(self.capacities)} capacities for {m} arcs")
        if any(c < 0 for c in self.capacities):
            raise ValueError("capacities must be nonnegative")
        for p in self.players:
            if p.source not in known or p.sink not in known:
                raise ValueError(f"player endpoints {p.source}->{p.sink} unknown")
            if p.source == p.sink:
                raise ValueError("source and sink must differ")
            if int(p.demand) != p.demand or p.demand < 0:
                raise ValueError("demands must be nonnegative integers")
        if self.cost_kind == BILINEAR:
            if self.c1 is None or self.c2 is None:
                raise ValueError("bilinear costs need c1 and c2")
            conv(self, "c1", tuple(tuple(tuple(int(v) for v in row) for row in mat) for mat in self.c1))
            conv(self, "c2", tuple(tuple(int(v) for v in vec) for vec in self.c2))
            if len(self.c1) != n or len(self.c2) != n:
                raise ValueError("one cost block per player is required")
            for mat, vec in zip(self.c1, self.c2):
                if len(mat) != m or any(len(r) != m for r in mat) or len(vec) != m:
                    raise ValueError("cost blocks must match the arc count")
        elif self.cost_kind == CONGESTION:
            if self.congestion is None:
                raise ValueError("congestion costs need per-player diagonals")
            conv(self, "congestion", tuple(tuple(int(v) for v in w) for w in self.congestion))
            if len(self.congestion) != n or any(len(w) != m for w in self.congestion):
                raise ValueError("congestion diagonals must match players and arcs")
        else:
            raise ValueError(f"unknown cost kind {self.cost_kind!r}")
        build_incidence(self.nodes, self.arcs)

    # -- sizes and cached structure ------------------------------------------

    @property
    def m(self) -> int:
        return len(self.arcs)

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def dims(self) -> tuple:
        return (self.m,) * self.n

    @cached_property
    def node_index(self) -> dict:
        return {v: k for k, v in enumerate(self.nodes)}

    @cached_property
    def arc_index_pairs(self) -> tuple:
        ix = self.node_index
        return tuple((ix[u], ix[v]) for u, v in self.arcs)

    @cached_property
    def incidence(self) -> tuple:
        return tuple(tuple(r) for r in build_incidence(self.nodes, self.arcs))

    def supply(self, i: int) -> tuple:
        """The vector ``b_i``: demand at the source, minus demand at the sink."""
        p = self.players[i]
        b = [0] * len(self.nodes)
        b[self.node_index[p.source]] = p.demand
        b[self.node_index[p.sink]] = -p.demand
        return tuple(b)

    def interaction(self, i: int) -> tuple:
        """``(D_i, g_i)`` as exact nested tuples."""
        if self.cost_kind == BILINEAR:
            return self.c1[i], self.c2[i]
        w = self.congestion[i]
        m = self.m
        return tuple(tuple(w[a] if a == b else 0 for b in range(m)) for a in range(m)), w

    @cached_property
    def interaction_arrays(self) -> tuple:
        """Float ``(D, g)`` stacked over players: shapes ``(n,m,m)`` and ``(n,m)``."""
        D = np.array([self.interaction(i)[0] for i in range(self.n)], dtype=float).reshape(self.n, self.m, self.m)
        g = np.array([self.interaction(i)[1] for i in range(self.n)], dtype=float).reshape(self.n, self.m)
        return D, g

    @property
    def max_scale(self) -> int:
        return max([self.n] + [p.demand for p in self.players])

    def type_tuple(self) -> tuple:
        return tuple(self.meta.get("type", ()))

    # -- costs ---------------------------------------------------------------

    def rival_load(self, i: int, x) -> list:
        m = self.m
        load = [0] * m
        for j, blk in enumerate(x):
            if j != i:
                for a in range(m):
                    load[a] += blk[a]
        return load

    def cost_vector_from_load(self, i: int, load: Sequence) -> tuple:
        m = self.m
        if self.cost_kind == CONGESTION:
            w = self.congestion[i]
            return tuple(w[a] * (1 + load[a]) for a in range(m))
        C1, C2 = self.c1[i], self.c2[i]
        return tuple(sum(C1[r][a] * load[r] for r in range(m) if load[r]) + C2[a] for a in range(m))

    def cost_vector(self, i: int, rivals: Sequence) -> tuple:
        """``C_i(x_-i)`` for a rival profile given as the tuple of other blocks."""
        return self.cost_vector_from_load(i, _sum_blocks(rivals, self.m))

    def cost(self, i: int, x) -> object:
        x = _as_profile(self, x)
        C = self.cost_vector(i, x.rivals(i))
        return sum(c * v for c, v in zip(C, x[i]))

    def residual(self, i: int, rivals: Sequence) -> tuple:
        load = _sum_blocks(rivals, self.m)
        return tuple(c - l for c, l in zip(self.capacities, load))

    # float helpers used on fractional iterates; ``X`` has shape (n, m)

    def cost_vectors_float(self, X: np.ndarray) -> np.ndarray:
        D, g = self.interaction_arrays
        total = X.sum(axis=0)
        loads = total[None, :] - X
        return np.einsum("irm,ir->im", D, loads) + g


def _sum_blocks(blocks, m) -> list:
    load = [0] * m
    for blk in blocks:
        for a in range(m):
            load[a] += blk[a]
    return load


def _as_profile(inst, x) -> StrategyProfile:
    x = x if isinstance(x, StrategyProfile) else StrategyProfile(x)
    if len(x) != inst.n or any(len(b) != inst.m for b in x):
        raise ValueError(f"profile shape {x.dims} does not match {inst.n} players x {inst.m} arcs")
    return x


def build_incidence(nodes: Sequence, arcs: Sequence) -> list:
    """Node-arc incidence matrix: +1 at the tail, -1 at the head of each arc."""
    if not arcs:
        raise ValueError("graph has no arcs")
    ix = {v: k for k, v in enumerate(nodes)}
    A = [[0] * len(arcs) for _ in nodes]
    for j, (u, v) in enumerate(arcs):
        if u == v:
            raise ValueError(f"self-loop at node {u!r}")
        A[ix[u]][j] = 1
        A[ix[v]][j] = -1
    return A


# -- min-cost flow -------------------------------------------------------------


def min_cost_flow(n_nodes: int, arcs: Sequence[tuple], caps: Sequence, costs: Sequence,
                  supply: Sequence, prices: bool = False):
    """Successive shortest paths for ``min c.y  s.t.  Ay = supply, 0 <= y <= caps``.

    Arcs with negative cost start saturated so that every residual arc has a
    nonnegative cost; the pseudo-flow then has no negative residual cycle and
    Dijkstra with potentials stays exact. Works with int,
    Fraction or float data; integral data gives an integral flow. Returns None
    when the supplies cannot be routed.

    With ``prices=True`` the result is ``(flow, p)`` where ``p`` are optimal
    node prices: the reduced cost ``c_j - p_u + p_v`` of an arc ``(u, v)`` is
    nonnegative unless the arc is saturated and nonpositive unless it is empty.
    """
    S, T = n_nodes, n_nodes + 1
    N = n_nodes + 2
    graph = [[] for _ in range(N)]
    # residual edge: [head, cap, cost, index of reverse edge]
    fwd = []
    excess = list(supply) + [0, 0]
    for j, (u, v) in enumerate(arcs):
        cap, cost = caps[j], costs[j]
        if cap < 0:
            return None
        if cost < 0:
            f_cap, b_cap = 0, cap
            excess[u] -= cap
            excess[v] += cap
        else:
            f_cap, b_cap = cap, 0
        graph[u].append([v, f_cap, cost, len(graph[v])])
        graph[v].append([u, b_cap, -cost, len(graph[u]) - 1])
        fwd.append((u, len(graph[u]) - 1))
    need = 0
    for v in range(n_nodes):
        e = excess[v]
        if e > 0:
            graph[S].append([v, e, 0, len(graph[v])])
            graph[v].append([S, 0, 0, len(graph[S]) - 1])
            need += e
        elif e < 0:
            graph[v].append([T, -e, 0, len(graph[T])])
            graph[T].append([v, 0, 0, len(graph[v]) - 1])
    pot = [0] * N
    eps = 1e-12
    while (need > eps) if isinstance(need, float) else (need > 0):
        dist = [None] * N
        prev = [None] * N
        done = [False] * N
        dist[S] = 0
        heap = [(0, 0, S)]
        tick = itertools.count(1)
        while heap:
            d, _, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            pu = pot[u]
            for k, (v, cap, cost, _) in enumerate(graph[u]):
                if done[v]:
                    continue
                if cap > 0 and not (isinstance(cap, float) and cap <= eps):
                    nd = d + cost + pu - pot[v]
                    if dist[v] is None or nd < dist[v]:
                        dist[v] = nd
                        prev[v] = (u, k)
                        heapq.heappush(heap, (nd, next(tick), v))
        if dist[T] is None:
            return None
        far = max(d for d in dist if d is not None)
        for v in range(N):
            # unreached nodes move by the largest distance so reduced costs stay nonnegative
            pot[v] += dist[v] if dist[v] is not None else far
        push = need
        v = T
        while v != S:
            u, k = prev[v]
            push = min(push, graph[u][k][1])
            v = u
        v = T
        while v != S:
            u, k = prev[v]
            e = graph[u][k]
            e[1] -= push
            graph[v][e[3]][1] += push
            v = u
        need -= push
    out = []
    for j, (u, k) in enumerate(fwd):
        out.append(caps[j] - graph[u][k][1])
    if prices:
        return out, [-pot[v] for v in range(n_nodes)]
    return out


class BestResponse(NamedTuple):
    status: str
    flow: Optional[tuple]
    value: object


def best_response_flow(inst: CdfgInstance, i: int, rivals: Sequence,
                       cost_vector: Optional[Sequence] = None) -> BestResponse:
    """Integral min-cost routing of player ``i``'s demand on residual capacities."""
    rivals = tuple(tuple(b) for b in rivals)
    if len(rivals) != inst.n - 1 or any(len(b) != inst.m for b in rivals):
        raise ValueError("rival profile does not match the instance")
    residual = inst.residual(i, rivals)
    if any(r < 0 for r in residual):
        raise ValueError("rival flows exceed the arc capacities")
    C = inst.cost_vector(i, rivals) if cost_vector is None else tuple(cost_vector)
    if inst.players[i].demand == 0:
        return BestResponse("optimal", (0,) * inst.m, 0)
    flow = min_cost_flow(len(inst.nodes), inst.arc_index_pairs, residual, C, inst.supply(i))
    if flow is None:
        return BestResponse("infeasible", None, None)
    flow = tuple(int(v) for v in flow)
    return BestResponse("optimal", flow, sum(c * v for c, v in zip(C, flow)))


def optimal_flows(inst: CdfgInstance, i: int, rivals: Sequence):
    """``(value, flows)``: the best-response value and every integral best response.

    The optimal face is read off one set of optimal node prices: arcs with
    positive reduced cost stay empty and arcs with negative reduced cost are
    saturated in every optimal flow. Returns ``(None, [])`` when player ``i``
    has no feasible flow.
    """
    rivals = tuple(tuple(b) for b in rivals)
    residual = inst.residual(i, rivals)
    if any(r < 0 for r in residual):
        raise ValueError("rival flows exceed the arc capacities")
    C = inst.cost_vector(i, rivals)
    pairs = inst.arc_index_pairs
    res = min_cost_flow(len(inst.nodes), pairs, residual, C, inst.supply(i), prices=True)
    if res is None:
        return None, []
    flow, p = res
    value = sum(c * v for c, v in zip(C, flow))
    lo, hi = [], []
    for (u, v), c, r in zip(pairs, C, residual):
        red = c - p[u] + p[v]
        lo.append(r if red < 0 else 0)
        hi.append(0 if red > 0 else r)
    return value, list(iter_flows(len(inst.nodes), pairs, hi, inst.supply(i), lo))


def enumerate_integral_flows(inst: CdfgInstance, i: int, residual: Sequence) -> list:
    """All integral flows of player ``i`` within ``residual``, in lexicographic order."""
    return list(iter_integral_flows(inst, i, residual))


def iter_integral_flows(inst: CdfgInstance, i: int, residual: Sequence):
    if len(residual) != inst.m:
        raise ValueError("residual capacity vector has the wrong length")
    return iter_flows(len(inst.nodes), inst.arc_index_pairs, residual, inst.supply(i))


def iter_flows(n_nodes: int, pairs: Sequence[tuple], caps: Sequence, supply: Sequence, lower=None):
    """Integral ``y`` with ``Ay = supply`` and ``lower <= y <= caps``, lexicographically.

    Depth-first over the arcs; a branch is cut as soon as some node can no
    longer be balanced by the arcs that remain.
    """
    m = len(pairs)
    caps = [int(c) for c in caps]
    lo = [0] * m if lower is None else [int(v) for v in lower]
    if any(c < l for c, l in zip(caps, lo)):
        return
    b = list(supply)
    nv = n_nodes
    # rem_out[k][v]: spare capacity leaving v on arcs k..m-1; rem_in likewise
    rem_out = [[0] * nv for _ in range(m + 1)]
    rem_in = [[0] * nv for _ in range(m + 1)]
    for k in range(m - 1, -1, -1):
        rem_out[k] = rem_out[k + 1][:]
        rem_in[k] = rem_in[k + 1][:]
        u, v = pairs[k]
        rem_out[k][u] += caps[k] - lo[k]
        rem_in[k][v] += caps[k] - lo[k]
    # net[v]: outflow minus inflow so far, with the lower bounds already placed
    net = [0] * nv
    for k, (u, v) in enumerate(pairs):
        net[u] += lo[k]
        net[v] -= lo[k]
    for v in range(nv):
        if not (net[v] - rem_in[0][v] <= b[v] <= net[v] + rem_out[0][v]):
            return
    y = lo[:]

    def ok(v, k):
        return net[v] - rem_in[k][v] <= b[v] <= net[v] + rem_out[k][v]

    def rec(k):
        if k == m:
            yield tuple(y)
            return
        u, v = pairs[k]
        base = lo[k]
        for f in range(caps[k] - base + 1):
            y[k] = base + f
            net[u] += f
            net[v] -= f
            if ok(u, k + 1) and ok(v, k + 1):
                yield from rec(k + 1)
            net[u] -= f
            net[v] += f
        y[k] = base

    yield from rec(0)


def iter_joint_profiles(inst: CdfgInstance):
    """Integral feasible profiles ``X`` in lexicographic order."""
    n = inst.n
    caps = list(inst.capacities)
    chosen = []

    def rec(i):
        if i == n:
            yield StrategyProfile(chosen)
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


def is_feasible_profile(inst: CdfgInstance, x) -> bool:
    """``x in X``: integral, conserving, within the shared capacities."""
    x = _as_profile(inst, x)
    return x.is_integral() and in_relaxed_set(inst, x)


def in_relaxed_set(inst: CdfgInstance, x) -> bool:
    """``x in X^``, decided exactly."""
    x = _as_profile(inst, x)
    A = inst.incidence
    for i, blk in enumerate(x):
        if any(v < 0 for v in blk):
            return False
        b = inst.supply(i)
        for r, row in enumerate(A):
            if sum(a * v for a, v in zip(row, blk) if a) != b[r]:
                return False
    load = _sum_blocks(x, inst.m)
    return all(l <= c for l, c in zip(load, inst.capacities))


# -- quasi-linear data and the player LP ----------------------------------------


@dataclass(frozen=True)
class QuasiLinearData:
    M: tuple
    e: tuple
    C: tuple


def quasi_linear_data(inst: CdfgInstance, i: int, rivals: Sequence) -> QuasiLinearData:
    """Stacked ``>=`` system ``M y >= e`` of player ``i`` and its cost vector."""
    rivals = tuple(tuple(b) for b in rivals)
    if len(rivals) != inst.n - 1 or any(len(b) != inst.m for b in rivals):
        raise ValueError("rival profile does not match the instance")
    A = inst.incidence
    m = inst.m
    eye = [tuple(1 if a == b else 0 for b in range(m)) for a in range(m)]
    M = [tuple(r) for r in A] + [tuple(-v for v in r) for r in A] + eye + [tuple(-v for v in r) for r in eye]
    b = inst.supply(i)
    load = _sum_blocks(rivals, m)
    e = list(b) + [-v for v in b] + [0] * m + [l - c for l, c in zip(load, inst.capacities)]
    return QuasiLinearData(tuple(M), tuple(e), inst.cost_vector(i, rivals))


class PlayerLp(NamedTuple):
    solution: LpSolution
    nu: Optional[tuple]
    value: object
    flow: Optional[tuple]


def solve_player_lp(inst: CdfgInstance, i: int, rivals: Sequence) -> PlayerLp:
    """Exact LP relaxation of player ``i``'s best response with stacked duals.

    The LP is solved as ``Ay = b, 0 <= y <= u``. Its equality duals ``p`` and
    reduced costs ``d`` give multipliers for the stacked system via
    ``nu = (p+, p-, d+, d-)``, which satisfy ``nu^T M = C`` and
    ``e . nu = b.p - u.d-``, the primal value.
    """
    rivals = tuple(tuple(b) for b in rivals)
    residual = inst.residual(i, rivals)
    C = inst.cost_vector(i, rivals)
    sol = solve_lp(LinearProgram(C, inst.incidence, inst.supply(i), EQ,
                                 lower=[0] * inst.m, upper=residual))
    if not sol.optimal:
        return PlayerLp(sol, None, None, None)
    p = sol.duals
    d = sol.reduced_costs
    zero = Fraction(0)
    nu = (tuple(max(v, zero) for v in p) + tuple(max(-v, zero) for v in p)
          + tuple(max(v, zero) for v in d) + tuple(max(-v, zero) for v in d))
    return PlayerLp(sol, nu, sol.objective, sol.x)


class PlayerRegion:
    """Float linear-minimization oracle over ``{Ay = b_i, 0 <= y <= caps}``.

    After each call ``prices`` holds optimal node prices of that LP, from
    which ``upper_multipliers`` recovers the multipliers of ``y <= caps``.
    """

    def __init__(self, inst: CdfgInstance, i: int, caps: Sequence):
        self.inst = inst
        self.i = i
        self.caps = [max(float(c), 0.0) for c in caps]
        self.b = [float(v) for v in inst.supply(i)]
        self.prices = None
        self.calls = 0

    def __call__(self, d) -> np.ndarray:
        inst = self.inst
        res = min_cost_flow(len(inst.nodes), inst.arc_index_pairs, self.caps,
                            [float(v) for v in d], self.b, prices=True)
        self.calls += 1
        if res is None:
            raise ValueError(f"player {self.i} has an empty strategy region")
        y, self.prices = res
        return np.asarray(y, dtype=float)

    def upper_multipliers(self, d) -> np.ndarray:
        p = self.prices
        red = np.array([float(c) - p[u] + p[v] for c, (u, v) in zip(d, self.inst.arc_index_pairs)])
        return np.maximum(-red, 0.0)


def player_region_oracle(inst: CdfgInstance, i: int, residual: Sequence) -> PlayerRegion:
    return PlayerRegion(inst, i, residual)


# -- the relaxed joint set -----------------------------------------------------


class JointSetOracle:
    """Linear minimization over ``X^ = {x_i >= 0, A x_i = b_i, sum_i x_i <= c}``.

    ``minimize`` is exact (rational simplex); calling the oracle with a float
    direction returns a float vertex from HiGHS, which is what the
    Frank-Wolfe projections use.
    """

    def __init__(self, inst: CdfgInstance):
        self.inst = inst
        n, m = inst.n, inst.m
        A = inst.incidence
        nv = len(A)
        rows, rhs, senses = [], [], []
        for i in range(n):
            b = inst.supply(i)
            for r in range(nv):
                row = [0] * (n * m)
                row[i * m:(i + 1) * m] = A[r]
                rows.append(row)
                rhs.append(b[r])
                senses.append(EQ)
        for a in range(m):
            row = [0] * (n * m)
            for i in range(n):
                row[i * m + a] = 1
            rows.append(row)
            rhs.append(inst.capacities[a])
            senses.append(LE)
        self.rows, self.rhs, self.senses = rows, rhs, senses
        self._float = None

    def minimize(self, direction) -> LpSolution:
        d = [v for blk in direction for v in blk] if _nested(direction) else list(direction)
        lp = LinearProgram(d, self.rows, self.rhs, self.senses, lower=[0] * len(d))
        return solve_lp(lp)

    def is_feasible(self) -> bool:
        return self.minimize([0] * (self.inst.n * self.inst.m)).optimal

    def contains(self, x, via_lp: bool = False) -> bool:
        x = _as_profile(self.inst, x)
        if not via_lp:
            return in_relaxed_set(self.inst, x)
        flat = x.flat()
        lp = LinearProgram([0] * len(flat), self.rows, self.rhs, self.senses, lower=flat, upper=flat)
        return solve_lp(lp).optimal

    def __call__(self, direction) -> np.ndarray:
        from scipy.optimize import linprog

        if self._float is None:
            n_eq = sum(1 for s in self.senses if s == EQ)
            R = np.array(self.rows, dtype=float)
            h = np.array(self.rhs, dtype=float)
            self._float = (R[:n_eq], h[:n_eq], R[n_eq:], h[n_eq:])
        A_eq, b_eq, A_ub, b_ub = self._float
        d = np.asarray(direction, dtype=float).ravel()
        res = linprog(d, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds")
        if res.status != 0:
            raise ValueError(f"relaxed joint set oracle failed: {res.message}")
        return np.asarray(res.x, dtype=float)

    def project_qp(self, z) -> np.ndarray:
        """Euclidean projection onto ``X^`` by an interior-point QP.

        Much faster than Frank-Wolfe projection on this set; the result is
        clipped to the nonnegative orthant and feasible to solver accuracy.
        """
        from cvxopt import matrix, solvers

        if getattr(self, "_qp", None) is None:
            inst = self.inst
            nv = len(inst.nodes)
            n_eq = sum(1 for s in self.senses if s == EQ)
            R = np.array(self.rows, dtype=float)
            h = np.array(self.rhs, dtype=float)
            # incidence rows of a connected component sum to zero: drop one per component
            redundant = set(_component_roots(nv, inst.arc_index_pairs))
            keep = [r for r in range(n_eq) if r % nv not in redundant]
            k = R.shape[1]
            G = np.vstack([R[n_eq:], -np.eye(k)])
            hh = np.concatenate([h[n_eq:], np.zeros(k)])
            self._qp = (matrix(np.eye(k)), matrix(G), matrix(hh), matrix(R[keep]), matrix(h[keep]))
        P, G, hh, A, b = self._qp
        z = np.asarray(z, dtype=float).ravel()
        sol = solvers.qp(P, matrix(-z), G, hh, A, b,
                         options={"show_progress": False, "abstol": 1e-10, "reltol": 1e-10, "feastol": 1e-10})
        if sol["status"] != "optimal" and sol["x"] is None:
            raise ValueError("projection onto the relaxed joint set failed")
        return np.maximum(np.asarray(sol["x"], dtype=float).ravel(), 0.0)


def _component_roots(n_nodes, pairs) -> list:
    parent = list(range(n_nodes))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in pairs:
        parent[find(u)] = find(v)
    return sorted({find(v) for v in range(n_nodes)})


def _nested(v) -> bool:
    return len(v) > 0 and isinstance(v[0], (tuple, list, np.ndarray)) and not isinstance(v, np.ndarray)


def relaxed_joint_set_oracle(inst: CdfgInstance) -> JointSetOracle:
    return JointSetOracle(inst)


# -- random instances ------------------------------------------------------------

EDGE_PROBABILITY = {10: 0.2, 15: 0.15, 20: 0.1}
COST_RANGE = (0, 20)
REDRAWS_PER_RANGE = 1000
MAX_RANGE_INCREMENTS = 200
EXHAUSTIVE_NODE_LIMIT = 10
EXHAUSTIVE_BUDGET = 20_000
GREEDY_ORDERS = 6


class GenerationError(RuntimeError):
    pass


def edge_probability(n_nodes: int) -> float:
    return EDGE_PROBABILITY.get(n_nodes, min(1.0, 2.0 / n_nodes))


def _reachable(n_nodes, arcs, s) -> set:
    adj = [[] for _ in range(n_nodes)]
    for u, v in arcs:
        adj[u].append(v)
    seen = {s}
    stack = [s]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def generate_instance(n_nodes: int, n_players: int, source_mode: str = "single",
                      weight_mode: str = "unit", seed: int = 0) -> CdfgInstance:
    """Random CDFG with a nonempty integral joint strategy set.

    Independent PCG64 streams drive the arcs, endpoints, demands, capacities
    and costs, so each class of random decisions is reproducible on its own.
    """
    if n_nodes < 2:
        raise ValueError("at least two nodes are needed")
    if n_players < 1:
        raise ValueError("at least one player is needed")
    if source_mode not in ("single", "multi"):
        raise ValueError(f"unknown source mode {source_mode!r}")
    if weight_mode not in ("unit", "random"):
        raise ValueError(f"unknown weight mode {weight_mode!r}")
    streams = [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(5)]
    r_arcs, r_ends, r_dem, r_cap, r_cost = streams

    p = edge_probability(n_nodes)
    pairs_all = [(a, b) for a in range(n_nodes) for b in range(n_nodes) if a != b]
    while True:
        mask = r_arcs.random(len(pairs_all)) < p
        arcs = [pr for pr, keep in zip(pairs_all, mask) if keep]
        connected = [(s, t) for s in range(n_nodes) for t in sorted(_reachable(n_nodes, arcs, s)) if t != s]
        if connected:
            break

    if source_mode == "single":
        st = connected[int(r_ends.integers(len(connected)))]
        ends = [st] * n_players
    else:
        ends = [connected[int(r_ends.integers(len(connected)))] for _ in range(n_players)]

    if weight_mode == "unit":
        demands = [1] * n_players
    else:
        demands = [int(v) for v in r_dem.integers(1, 11, size=n_players)]

    m = len(arcs)
    lo, hi = COST_RANGE
    if weight_mode == "unit":
        cong = [tuple(int(v) for v in r_cost.integers(lo, hi + 1, size=m)) for _ in range(n_players)]
        cost_kw = dict(cost_kind=CONGESTION, congestion=tuple(cong))
    else:
        c1 = [tuple(tuple(int(v) for v in row) for row in r_cost.integers(lo, hi + 1, size=(m, m)))
              for _ in range(n_players)]
        c2 = [tuple(int(v) for v in r_cost.integers(lo, hi + 1, size=m)) for _ in range(n_players)]
        cost_kw = dict(cost_kind=BILINEAR, c1=tuple(c1), c2=tuple(c2))

    players = tuple(Player(s, t, d) for (s, t), d in zip(ends, demands))
    top = max([n_players] + demands)
    meta = {
        "seed": int(seed),
        "params": {"n_nodes": n_nodes, "n_players": n_players,
                   "source_mode": source_mode, "weight_mode": weight_mode},
        "type": [n_players, n_nodes, source_mode[0], 1 if weight_mode == "unit" else 10],
    }
    base = CdfgInstance(tuple(range(n_nodes)), tuple(arcs), (0,) * m, players, meta=meta, **cost_kw)
    for _ in range(MAX_RANGE_INCREMENTS):
        for _ in range(REDRAWS_PER_RANGE):
            caps = tuple(int(v) for v in r_cap.integers(1, top + 1, size=m))
            greedy = greedy_routing(base, caps, GREEDY_ORDERS) is not None
            if greedy or n_nodes <= EXHAUSTIVE_NODE_LIMIT:
                inst = dataclasses.replace(base, capacities=caps)
                if greedy or joint_set_nonempty(inst, greedy_failed=True):
                    meta["capacity_range"] = [1, top]
                    return inst
        top += 1
    raise GenerationError(f"no feasible capacities found for seed {seed}")


def _split_flow(pairs, flow, s, t, demands):
    """Split an integral s-t flow into per-player integral flows along paths."""
    rest = list(flow)
    out = []
    for d in demands:
        mine = [0] * len(rest)
        need = d
        while need > 0:
            # depth-first search for an s-t path on arcs with remaining flow
            prev = {s: None}
            stack = [s]
            while stack and t not in prev:
                u = stack.pop()
                for j, (a, b) in enumerate(pairs):
                    if a == u and rest[j] > 0 and b not in prev:
                        prev[b] = j
                        stack.append(b)
            if t not in prev:
                return None
            path = []
            v = t
            while v != s:
                j = prev[v]
                path.append(j)
                v = pairs[j][0]
            push = min([need] + [rest[j] for j in path])
            for j in path:
                rest[j] -= push
                mine[j] += push
            need -= push
        out.append(tuple(mine))
    return out


def greedy_routing(inst: CdfgInstance, capacities: Optional[Sequence[int]] = None,
                   orders: int = 1) -> Optional[StrategyProfile]:
    """Integral routing that certifies ``X != {}`` when it succeeds.

    Players sharing a source and sink are routed together as one commodity
    along unit-cost shortest paths and then split into paths. Groups are
    routed one after another; up to ``orders`` group orders are tried.
    """
    pairs = inst.arc_index_pairs
    ix = inst.node_index
    groups = {}
    for i, p in enumerate(inst.players):
        groups.setdefault((p.source, p.sink), []).append(i)
    keys = list(groups)
    for order in itertools.islice(itertools.permutations(range(len(keys))), orders):
        caps = list(inst.capacities if capacities is None else capacities)
        flows = [None] * inst.n
        for g in order:
            (src, dst), members = keys[g], groups[keys[g]]
            total = sum(inst.players[i].demand for i in members)
            b = [0] * len(inst.nodes)
            b[ix[src]], b[ix[dst]] = total, -total
            f = min_cost_flow(len(inst.nodes), pairs, caps, [1] * inst.m, b)
            if f is None:
                break
            parts = _split_flow(pairs, [int(v) for v in f], ix[src], ix[dst],
                                [inst.players[i].demand for i in members])
            if parts is None:
                break
            for i, part in zip(members, parts):
                flows[i] = part
                caps = [c - v for c, v in zip(caps, part)]
        else:
            return StrategyProfile(flows)
    return None


def _relaxation_feasible_float(inst: CdfgInstance) -> bool:
    from scipy.optimize import linprog

    oracle = relaxed_joint_set_oracle(inst)
    n_eq = sum(1 for sense in oracle.senses if sense == EQ)
    R = np.array(oracle.rows, dtype=float)
    h = np.array(oracle.rhs, dtype=float)
    res = linprog(np.zeros(R.shape[1]), A_ub=R[n_eq:], b_ub=h[n_eq:], A_eq=R[:n_eq], b_eq=h[:n_eq],
                  bounds=(0, None), method="highs")
    return res.status == 0


def _groups_routable_alone(inst: CdfgInstance) -> bool:
    """Each source-sink group must fit on the full capacities by itself."""
    groups = {}
    for p in inst.players:
        groups[(p.source, p.sink)] = groups.get((p.source, p.sink), 0) + p.demand
    ix, nv = inst.node_index, len(inst.nodes)
    for (src, dst), total in groups.items():
        b = [0] * nv
        b[ix[src]], b[ix[dst]] = total, -total
        if min_cost_flow(nv, inst.arc_index_pairs, inst.capacities, [1] * inst.m, b) is None:
            return False
    return True


def joint_set_nonempty(inst: CdfgInstance, greedy_failed: bool = False) -> bool:
    """Certify ``X != {}``: greedy routing, then exact and LP rejects, then search on small graphs."""
    if not greedy_failed and greedy_routing(inst, orders=GREEDY_ORDERS) is not None:
        return True
    # with one source-sink pair the greedy routing is exact
    if len({(p.source, p.sink) for p in inst.players}) == 1:
        return False
    # beyond the search limit only the greedy certificate counts
    if len(inst.nodes) > EXHAUSTIVE_NODE_LIMIT:
        return False
    # a float LP only filters; the certificate below is exact
    if not _groups_routable_alone(inst) or not _relaxation_feasible_float(inst):
        return False
    return find_joint_profile(inst, EXHAUSTIVE_BUDGET) is not None


def find_joint_profile(inst: CdfgInstance, budget: Optional[int] = None) -> Optional[StrategyProfile]:
    """Some profile of ``X`` found by depth-first search, or None.

    All players but the last are enumerated; the last one is routed directly.
    None is also returned once more than ``budget`` flows were enumerated.
    """
    n = inst.n
    caps = list(inst.capacities)
    chosen = []
    visited = 0
    nv, pairs = len(inst.nodes), inst.arc_index_pairs

    def rec(i):
        nonlocal visited
        if i == n - 1:
            f = min_cost_flow(nv, pairs, caps, [1] * inst.m, inst.supply(i))
            if f is None:
                return False
            chosen.append(tuple(int(v) for v in f))
            return True
        for f in iter_integral_flows(inst, i, caps):
            visited += 1
            if budget is not None and visited > budget:
                return False
            for a in range(inst.m):
                caps[a] -= f[a]
            chosen.append(f)
            found = rec(i + 1)
            for a in range(inst.m):
                caps[a] += f[a]
            if found:
                return True
            chosen.pop()
        return False

    return StrategyProfile(chosen) if rec(0) else None


def any_joint_profile(inst: CdfgInstance) -> Optional[StrategyProfile]:
    x = greedy_routing(inst)
    return x if x is not None else find_joint_profile(inst)


__all__ = [
    "BILINEAR", "CONGESTION", "Player", "CdfgInstance", "build_incidence", "min_cost_flow",
    "BestResponse", "best_response_flow", "enumerate_integral_flows", "iter_integral_flows",
    "iter_joint_profiles", "is_feasible_profile", "in_relaxed_set", "QuasiLinearData",
    "quasi_linear_data", "PlayerLp", "solve_player_lp", "PlayerRegion", "player_region_oracle",
    "JointSetOracle", "relaxed_joint_set_oracle", "generate_instance", "GenerationError",
    "greedy_routing", "joint_set_nonempty", "find_joint_profile", "any_joint_profile", "edge_probability", "assemble",
]
