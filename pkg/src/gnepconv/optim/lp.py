"""Exact rational linear programming.

A dense-tableau bounded-variable primal simplex over ``fractions.Fraction``
with Bland's rule. Every optimal solution comes with row duals and reduced
costs so that primal feasibility, dual feasibility and complementary
slackness can be checked with exact equality.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

GE, LE, EQ = ">=", "<=", "="
_SENSES = (GE, LE, EQ)


def as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    return Fraction(v)


@dataclass(frozen=True)
class LinearProgram:
    """``min/max c.x  s.t.  M x (sense) e,  lower <= x <= upper``.

    ``lower``/``upper`` default to unbounded (free variables); individual
    entries may be ``None`` for an infinite bound.
    """

    c: tuple
    M: tuple
    e: tuple
    senses: tuple
    lower: Optional[tuple] = None
    upper: Optional[tuple] = None
    maximize: bool = False

    def __post_init__(self):
        n = len(self.c)
        object.__setattr__(self, "c", tuple(as_fraction(v) for v in self.c))
        object.__setattr__(self, "M", tuple(tuple(as_fraction(v) for v in row) for row in self.M))
        object.__setattr__(self, "e", tuple(as_fraction(v) for v in self.e))
        if isinstance(self.senses, str):
            object.__setattr__(self, "senses", (self.senses,) * len(self.M))
        else:
            object.__setattr__(self, "senses", tuple(self.senses))
        if len(self.e) != len(self.M) or len(self.senses) != len(self.M):
            raise ValueError("row count mismatch between M, e and senses")
        for row in self.M:
            if len(row) != n:
                raise ValueError(f"constraint row has {len(row)} entries, expected {n}")
        for s in self.senses:
            if s not in _SENSES:
                raise ValueError(f"unknown row sense {s!r}")
        for name in ("lower", "upper"):
            b = getattr(self, name)
            if b is None:
                continue
            if len(b) != n:
                raise ValueError(f"{name} bound has {len(b)} entries, expected {n}")
            object.__setattr__(self, name, tuple(None if v is None else as_fraction(v) for v in b))

    @property
    def n_vars(self) -> int:
        return len(self.c)

    def bounds(self, j):
        lo = None if self.lower is None else self.lower[j]
        hi = None if self.upper is None else self.upper[j]
        return lo, hi


@dataclass
class LpSolution:
    status: str
    x: Optional[tuple] = None
    duals: Optional[tuple] = None
    reduced_costs: Optional[tuple] = None
    objective: Optional[Fraction] = None
    pivots: int = 0
    lp: Optional[LinearProgram] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def dual_objective(self) -> Fraction:
        """``e.y`` plus the bound terms carried by the reduced costs."""
        lp = self.lp
        val = sum((e * y for e, y in zip(lp.e, self.duals)), Fraction(0))
        for j, d in enumerate(self.reduced_costs):
            if d == 0:
                continue
            lo, hi = lp.bounds(j)
            # min-form reduced cost; positive ⇒ variable pinned at lower bound
            dd = -d if lp.maximize else d
            bound = lo if dd > 0 else hi
            val += d * bound
        return val


def solve_lp(lp: LinearProgram) -> LpSolution:
    return _Simplex(lp).run()


class _Simplex:
    # columns: structural (transformed) vars, then slacks, then one artificial per row

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        self.pivots = 0
        sign = -1 if lp.maximize else 1
        # x_orig[j] = offset[j] + sum(coef * x'[col]) over cols in terms[j]
        self.terms = []
        self.offset = []
        cols_lo_hi = []  # (upper bound of x') per column; lower is 0
        col_cost = []
        for j in range(lp.n_vars):
            lo, hi = lp.bounds(j)
            cj = sign * lp.c[j]
            if lo is not None:
                self.offset.append(lo)
                self.terms.append([(len(cols_lo_hi), 1)])
                cols_lo_hi.append(None if hi is None else hi - lo)
                col_cost.append(cj)
                if hi is not None and hi < lo:
                    self.trivially_infeasible = True
            elif hi is not None:
                self.offset.append(hi)
                self.terms.append([(len(cols_lo_hi), -1)])
                cols_lo_hi.append(None)
                col_cost.append(-cj)
            else:
                self.offset.append(Fraction(0))
                self.terms.append([(len(cols_lo_hi), 1), (len(cols_lo_hi) + 1, -1)])
                cols_lo_hi.extend([None, None])
                col_cost.extend([cj, -cj])
        n_struct = len(cols_lo_hi)
        m = len(lp.M)
        rows = []
        rhs = []
        for r in range(m):
            row = [Fraction(0)] * n_struct
            b = lp.e[r]
            for j, a in enumerate(lp.M[r]):
                if not a:
                    continue
                b -= a * self.offset[j]
                for col, coef in self.terms[j]:
                    row[col] += a * coef if coef == 1 else -a
            rows.append(row)
            rhs.append(b)
        # slacks
        slack_of_row = {}
        n_cols = n_struct
        for r in range(m):
            if lp.senses[r] != EQ:
                slack_of_row[r] = n_cols
                n_cols += 1
        for r in range(m):
            row = rows[r]
            row.extend([Fraction(0)] * (n_cols - n_struct))
            if r in slack_of_row:
                row[slack_of_row[r]] = Fraction(1) if lp.senses[r] == LE else Fraction(-1)
        upper = list(cols_lo_hi) + [None] * (n_cols - n_struct)
        cost = list(col_cost) + [Fraction(0)] * (n_cols - n_struct)
        # normalise rhs >= 0
        self.row_sign = []
        for r in range(m):
            if rhs[r] < 0:
                rows[r] = [-v for v in rows[r]]
                rhs[r] = -rhs[r]
                self.row_sign.append(-1)
            else:
                self.row_sign.append(1)
        self.art0 = n_cols
        for r in range(m):
            rows[r].extend([Fraction(0)] * m)
            rows[r][n_cols + r] = Fraction(1)
        n_cols += m
        upper.extend([None] * m)
        cost.extend([Fraction(0)] * m)
        self.T = rows
        self.beta = list(rhs)
        self.basis = [self.art0 + r for r in range(m)]
        self.is_basic = [False] * n_cols
        for b in self.basis:
            self.is_basic[b] = True
        self.at_upper = [False] * n_cols
        self.upper = upper
        self.cost = cost
        self.n_cols = n_cols
        self.m = m
        self.n_struct = n_struct
        self.barred = [False] * n_cols

    # --- core iterations -------------------------------------------------

    def _reduced_costs(self, cost):
        d = list(cost)
        for r, b in enumerate(self.basis):
            cb = cost[b]
            if not cb:
                continue
            for j, v in enumerate(self.T[r]):
                if v:
                    d[j] -= cb * v
        return d

    def _iterate(self, cost):
        T, beta, basis = self.T, self.beta, self.basis
        d = self._reduced_costs(cost)
        while True:
            enter = -1
            for j in range(self.n_cols):
                if self.is_basic[j] or self.barred[j]:
                    continue
                dj = d[j]
                if (dj < 0 and not self.at_upper[j]) or (dj > 0 and self.at_upper[j]):
                    enter = j
                    break
            if enter < 0:
                return OPTIMAL
            sigma = -1 if self.at_upper[enter] else 1
            best = self.upper[enter]  # bound flip
            leave_row = -1
            leave_key = enter
            leave_to_upper = False
            for r in range(self.m):
                a = T[r][enter]
                if not a:
                    continue
                sa = a if sigma == 1 else -a
                b = basis[r]
                if sa > 0:
                    theta = beta[r] / sa
                    to_upper = False
                else:
                    ub = self.upper[b]
                    if ub is None:
                        continue
                    theta = (ub - beta[r]) / (-sa)
                    to_upper = True
                if best is None or theta < best or (theta == best and b < leave_key):
                    best = theta
                    leave_row = r
                    leave_key = b
                    leave_to_upper = to_upper
            if best is None:
                return UNBOUNDED
            theta = best
            if theta:
                for r in range(self.m):
                    a = T[r][enter]
                    if a:
                        beta[r] -= sigma * a * theta
            if leave_row < 0:
                self.at_upper[enter] = not self.at_upper[enter]
                continue
            self.pivots += 1
            new_val = theta if sigma == 1 else self.upper[enter] - theta
            leaving = basis[leave_row]
            beta[leave_row] = new_val
            self.is_basic[leaving] = False
            self.at_upper[leaving] = leave_to_upper
            self.is_basic[enter] = True
            self.at_upper[enter] = False
            basis[leave_row] = enter
            prow = T[leave_row]
            piv = prow[enter]
            if piv != 1:
                inv = 1 / piv
                for j, v in enumerate(prow):
                    if v:
                        prow[j] = v * inv
            nz = [(j, v) for j, v in enumerate(prow) if v]
            for r in range(self.m):
                if r == leave_row:
                    continue
                row = T[r]
                f = row[enter]
                if f:
                    for j, v in nz:
                        row[j] -= f * v
            f = d[enter]
            if f:
                for j, v in nz:
                    d[j] -= f * v

    def run(self) -> LpSolution:
        lp = self.lp
        if getattr(self, "trivially_infeasible", False):
            return LpSolution(INFEASIBLE, lp=lp)
        # phase 1
        phase1 = [Fraction(0)] * self.n_cols
        for r in range(self.m):
            phase1[self.art0 + r] = Fraction(1)
        self._iterate(phase1)
        infeas = sum((self.beta[r] for r in range(self.m) if self.basis[r] >= self.art0), Fraction(0))
        if infeas > 0:
            return LpSolution(INFEASIBLE, pivots=self.pivots, lp=lp)
        for r in range(self.m):
            a = self.art0 + r
            self.upper[a] = Fraction(0)
            self.barred[a] = True
        status = self._iterate(self.cost)
        if status == UNBOUNDED:
            return LpSolution(UNBOUNDED, pivots=self.pivots, lp=lp)
        return self._extract()

    def _extract(self) -> LpSolution:
        lp = self.lp
        vals = [Fraction(0)] * self.n_cols
        for j in range(self.n_cols):
            if not self.is_basic[j] and self.at_upper[j]:
                vals[j] = self.upper[j]
        for r, b in enumerate(self.basis):
            vals[b] = self.beta[r]
        x = []
        for j in range(lp.n_vars):
            v = self.offset[j]
            for col, coef in self.terms[j]:
                v += vals[col] if coef == 1 else -vals[col]
            x.append(v)
        d = self._reduced_costs(self.cost)
        sign = -1 if lp.maximize else 1
        duals = []
        for r in range(self.m):
            y = -d[self.art0 + r] * self.row_sign[r]
            duals.append(sign * y)
        reduced = []
        for j in range(lp.n_vars):
            rc = lp.c[j] - sum((lp.M[r][j] * duals[r] for r in range(self.m) if lp.M[r][j]), Fraction(0))
            reduced.append(rc)
        obj = sum((c * v for c, v in zip(lp.c, x)), Fraction(0))
        return LpSolution(OPTIMAL, tuple(x), tuple(duals), tuple(reduced), obj, self.pivots, lp)


def check_optimality(sol: LpSolution) -> list:
    """Return the list of violated optimality conditions (empty when exact)."""
    lp = sol.lp
    problems = []
    x, y, d = sol.x, sol.duals, sol.reduced_costs
    for r, row in enumerate(lp.M):
        lhs = sum((a * v for a, v in zip(row, x)), Fraction(0))
        s, e = lp.senses[r], lp.e[r]
        if (s == GE and lhs < e) or (s == LE and lhs > e) or (s == EQ and lhs != e):
            problems.append(f"row {r} primal infeasible")
        yy = -y[r] if lp.maximize else y[r]
        if (s == GE and yy < 0) or (s == LE and yy > 0):
            problems.append(f"row {r} dual sign")
        if yy and lhs != e:
            problems.append(f"row {r} complementary slackness")
    for j in range(lp.n_vars):
        lo, hi = lp.bounds(j)
        if (lo is not None and x[j] < lo) or (hi is not None and x[j] > hi):
            problems.append(f"var {j} out of bounds")
        dd = -d[j] if lp.maximize else d[j]
        if dd > 0 and (lo is None or x[j] != lo):
            problems.append(f"var {j} reduced cost / lower bound")
        if dd < 0 and (hi is None or x[j] != hi):
            problems.append(f"var {j} reduced cost / upper bound")
    if not problems and sol.objective != sol.dual_objective():
        problems.append("duality gap")
    return problems
