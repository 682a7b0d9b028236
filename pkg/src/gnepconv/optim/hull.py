"""Exact convex-hull membership via LP feasibility of convex weights."""
from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .lp import EQ, LinearProgram, solve_lp


def hull_weights(p: Sequence, S: Sequence[Sequence]) -> Optional[tuple]:
    """Convex weights ``lam`` with ``sum lam_l S[l] == p``, or None if ``p`` is outside."""
    S = [tuple(s) for s in S]
    if not S:
        raise ValueError("hull membership against an empty point set")
    dim = len(p)
    for s in S:
        if len(s) != dim:
            raise ValueError(f"point of dimension {len(s)} in a set of dimension {dim}")
    if tuple(p) in S:
        lam = [Fraction(0)] * len(S)
        lam[S.index(tuple(p))] = Fraction(1)
        return tuple(lam)
    rows = [[s[d] for s in S] for d in range(dim)]
    rows.append([1] * len(S))
    rhs = list(p) + [1]
    sol = solve_lp(LinearProgram([0] * len(S), rows, rhs, EQ, lower=[0] * len(S)))
    return sol.x if sol.optimal else None


def hull_membership(p: Sequence, S: Sequence[Sequence]) -> bool:
    return hull_weights(p, S) is not None


def extreme_points(S: Sequence[Sequence]) -> list:
    """Points of ``S`` that are not convex combinations of the others."""
    pts = sorted(set(tuple(s) for s in S))
    out = []
    for k, p in enumerate(pts):
        rest = pts[:k] + pts[k + 1:]
        if not rest or not hull_membership(p, rest):
            out.append(p)
    return out
