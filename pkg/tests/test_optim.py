import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnepconv.flowgame import CONGESTION, CdfgInstance, player_region_oracle, relaxed_joint_set_oracle
from gnepconv.optim.hull import extreme_points, hull_membership, hull_weights
from gnepconv.optim.lp import (EQ, GE, INFEASIBLE, LE, UNBOUNDED, LinearProgram, check_optimality,
                               solve_lp)
from gnepconv.optim.qp import QuadraticSubproblem, project_euclidean, solve_qp_fw


# -- LP ---------------------------------------------------------------------------


def test_single_bound_lp_value_and_dual():
    sol = solve_lp(LinearProgram([1], [[1]], [2], GE))
    assert sol.optimal
    assert sol.objective == 2
    assert sol.duals == (1,)
    assert check_optimality(sol) == []


def test_infeasible_lp():
    assert solve_lp(LinearProgram([0], [[1], [1]], [1, 0], (GE, LE))).status == INFEASIBLE


def test_unbounded_lp():
    assert solve_lp(LinearProgram([-1], [[1]], [0], GE)).status == UNBOUNDED


def test_maximize_with_bounds():
    # max x + y, x + 2y <= 4, 0 <= x <= 3, y >= 0: optimum (3, 1/2)
    sol = solve_lp(LinearProgram([1, 1], [[1, 2]], [4], LE, lower=[0, 0], upper=[3, None], maximize=True))
    assert sol.x == (3, Fraction(1, 2))
    assert sol.objective == Fraction(7, 2)
    assert check_optimality(sol) == []


def test_shape_errors():
    with pytest.raises(ValueError):
        LinearProgram([1, 1], [[1]], [1], GE)
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], [1], "!=")


def test_degenerate_lp_terminates():
    # several constraints tight at the optimum
    rows = [[1, 1], [1, 0], [0, 1], [2, 1], [1, 2]]
    sol = solve_lp(LinearProgram([-1, -1], rows, [1, 1, 1, 2, 2], LE, lower=[0, 0]))
    assert sol.objective == -1
    assert check_optimality(sol) == []


@st.composite
def bounded_lps(draw):
    n = draw(st.integers(1, 4))
    r = draw(st.integers(1, 4))
    ints = st.integers(-4, 4)
    M = [[draw(ints) for _ in range(n)] for _ in range(r)]
    e = [draw(ints) for _ in range(r)]
    senses = [draw(st.sampled_from((GE, LE, EQ))) for _ in range(r)]
    c = [draw(ints) for _ in range(n)]
    return LinearProgram(c, M, e, senses, lower=[-3] * n, upper=[3] * n, maximize=draw(st.booleans()))


@given(bounded_lps())
def test_strong_duality_and_certificate(lp):
    sol = solve_lp(lp)
    assert sol.status in ("optimal", INFEASIBLE)
    if sol.optimal:
        assert check_optimality(sol) == []
        assert sol.objective == sol.dual_objective()


@given(bounded_lps())
def test_optimum_beats_every_integral_point(lp):
    sol = solve_lp(lp)
    if not sol.optimal:
        return
    sign = -1 if lp.maximize else 1
    for x in itertools.product(range(-3, 4), repeat=lp.n_vars):
        ok = True
        for row, e, s in zip(lp.M, lp.e, lp.senses):
            v = sum(a * b for a, b in zip(row, x))
            if (s == GE and v < e) or (s == LE and v > e) or (s == EQ and v != e):
                ok = False
                break
        if ok:
            assert sign * sol.objective <= sign * sum(a * b for a, b in zip(lp.c, x))


# -- hull membership ----------------------------------------------------------------


STRONG_JC = [(2, 1), (1, 2), (4, 2), (4, 4)]


def _inside_convex_polygon(p, poly):
    """Orientation test against a counter-clockwise polygon."""
    for a, b in zip(poly, poly[1:] + poly[:1]):
        if (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) < 0:
            return False
    return True


def test_hull_examples():
    assert hull_membership((4, 4), STRONG_JC)
    assert hull_membership((3, 3), STRONG_JC)
    assert hull_membership((Fraction(3), Fraction(3, 2)), STRONG_JC)
    assert not hull_membership((1, 1), STRONG_JC)
    ccw = [(2, 1), (4, 2), (4, 4), (1, 2)]
    for p in [(3, 3), (1, 1), (2, 2), (3, 1), (Fraction(5, 2), Fraction(13, 4))]:
        assert hull_membership(p, STRONG_JC) == _inside_convex_polygon(p, ccw)


def test_hull_weights_reconstruct_point():
    lam = hull_weights((3, 3), STRONG_JC)
    assert sum(lam) == 1 and min(lam) >= 0
    assert tuple(sum(l * s[d] for l, s in zip(lam, STRONG_JC)) for d in range(2)) == (3, 3)


def test_hull_errors():
    with pytest.raises(ValueError):
        hull_membership((0,), [])
    with pytest.raises(ValueError):
        hull_membership((0, 0), [(0,)])


def test_extreme_points():
    assert extreme_points([(1,), (2,), (4,)]) == [(1,), (4,)]
    assert extreme_points(STRONG_JC) == sorted(STRONG_JC)
    assert extreme_points([(0, 0)]) == [(0, 0)]


def _slack_lp_member(p, S):
    """Independent check: minimize total slack of the weight system."""
    k, dim = len(S), len(p)
    # variables: lam (k), s_plus (dim), s_minus (dim)
    rows = []
    for d in range(dim):
        rows.append([s[d] for s in S] + [1 if e == d else 0 for e in range(dim)]
                    + [-1 if e == d else 0 for e in range(dim)])
    rows.append([1] * k + [0] * (2 * dim))
    c = [0] * k + [1] * (2 * dim)
    sol = solve_lp(LinearProgram(c, rows, list(p) + [1], EQ, lower=[0] * (k + 2 * dim)))
    return sol.objective == 0


def test_hull_agrees_with_slack_lp():
    rng = random.Random(7)
    for _ in range(100):
        dim = rng.randint(1, 4)
        S = [tuple(rng.randint(0, 3) for _ in range(dim)) for _ in range(rng.randint(1, 5))]
        p = tuple(Fraction(rng.randint(0, 6), 2) for _ in range(dim))
        assert hull_membership(p, S) == _slack_lp_member(p, S)


# -- quadratic subproblems ----------------------------------------------------------


def box_lmo(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    return lambda d: np.where(np.asarray(d) < 0, hi, lo)


def vertex_lmo(V):
    V = np.asarray(V, float)
    return lambda d: V[int(np.argmin(V @ np.asarray(d, float)))]


def test_projection_inside_box_is_identity():
    z = np.array([0.3, 0.7])
    r = project_euclidean(box_lmo([0, 0], [1, 1]), z)
    assert np.allclose(r.point, z, atol=1e-6)


def test_projection_clamps_to_box():
    r = solve_qp_fw(QuadraticSubproblem(np.zeros(2), np.array([2.0, -1.0]), 2.0, box_lmo([0, 0], [1, 1])))
    assert np.allclose(r.point, [1, 0], atol=1e-6)
    assert r.converged


def test_projection_onto_segment_endpoint():
    r = project_euclidean(vertex_lmo([[0, 0], [1, 1]]), np.array([2.0, 2.0]))
    assert np.allclose(r.point, [1, 1], atol=1e-6)


def test_nonpositive_weight_rejected():
    with pytest.raises(ValueError):
        QuadraticSubproblem(np.zeros(1), np.zeros(1), 0.0, box_lmo([0], [1]))


def _grid_minimize(f, lo, hi, step, rounds=4):
    """Brute force over a 2D grid, refined around the best point."""
    best = None
    for _ in range(rounds):
        us = np.arange(lo[0], hi[0] + step / 2, step)
        vs = np.arange(lo[1], hi[1] + step / 2, step)
        for u in us:
            for v in vs:
                val = f(u, v)
                if val is not None and (best is None or val < best[0]):
                    best = (val, u, v)
        _, bu, bv = best
        lo = (max(lo[0], bu - 2 * step), max(lo[1], bv - 2 * step))
        hi = (min(hi[0], bu + 2 * step), min(hi[1], bv + 2 * step))
        step /= 20
    return best


def three_path_instance():
    # s->t directly, through a, through b; one unit of demand
    arcs = [("s", "t"), ("s", "a"), ("a", "t"), ("s", "b"), ("b", "t")]
    return CdfgInstance(["s", "a", "b", "t"], arcs, [1] * 5, [("s", "t", 1)], CONGESTION,
                        congestion=[[1] * 5])


def test_three_vertex_flow_polytope_matches_grid():
    inst = three_path_instance()
    lmo = player_region_oracle(inst, 0, inst.capacities)
    P = np.array([[1, 0, 0, 0, 0], [0, 1, 1, 0, 0], [0, 0, 0, 1, 1]], float)
    rng = np.random.default_rng(3)
    for _ in range(3):
        z = rng.uniform(-0.5, 1.5, size=5)
        a = rng.uniform(-1, 1, size=5)
        sub = QuadraticSubproblem(a, z, 1.0, lmo)
        res = solve_qp_fw(sub, tol=1e-12)

        def f(u, v):
            w = 1 - u - v
            if w < -1e-12:
                return None
            return sub.value(u * P[0] + v * P[1] + max(w, 0.0) * P[2])

        val, u, v = _grid_minimize(f, (0, 0), (1, 1), 0.01, rounds=5)
        grid_point = u * P[0] + v * P[1] + max(1 - u - v, 0.0) * P[2]
        assert np.max(np.abs(res.point - grid_point)) < 1e-6


def two_lane_instance():
    # upper lane s->a->t with capacity 1, lower lane s->b->t with capacity 2
    arcs = [("s", "a"), ("a", "t"), ("s", "b"), ("b", "t")]
    return CdfgInstance(["s", "a", "b", "t"], arcs, [1, 1, 2, 2], [("s", "t", 1), ("s", "t", 1)],
                        CONGESTION, congestion=[[1, 1, 1, 1], [1, 1, 1, 1]])


def _lane_point(u1, u2):
    return np.array([u1, u1, 1 - u1, 1 - u1, u2, u2, 1 - u2, 1 - u2])


def test_projection_onto_relaxed_joint_set_matches_grid():
    inst = two_lane_instance()
    oracle = relaxed_joint_set_oracle(inst)
    rng = np.random.default_rng(11)
    for _ in range(3):
        z = rng.uniform(-0.5, 1.5, size=8)

        def f(u1, u2):
            if u1 + u2 > 1 + 1e-12:
                return None
            r = _lane_point(u1, u2) - z
            return float(r @ r)

        _, u1, u2 = _grid_minimize(f, (0, 0), (1, 1), 0.01, rounds=3)
        expected = _lane_point(u1, u2)
        fw = project_euclidean(oracle, z, tol=1e-6).point
        assert np.max(np.abs(fw - expected)) < 1e-4
        assert np.max(np.abs(oracle.project_qp(z) - expected)) < 1e-4


def test_projection_idempotent():
    inst = two_lane_instance()
    oracle = relaxed_joint_set_oracle(inst)
    tol = 1e-6
    rng = np.random.default_rng(5)
    for _ in range(5):
        p = project_euclidean(oracle, rng.uniform(-1, 2, size=8), tol=tol).point
        q = project_euclidean(oracle, p, tol=tol).point
        assert np.linalg.norm(p - q) <= 2 * tol
