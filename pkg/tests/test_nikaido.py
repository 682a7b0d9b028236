import itertools
from fractions import Fraction

import numpy as np
import pytest
from cvxopt import matrix, solvers
from hypothesis import given
from hypothesis import strategies as st
from strategies import exact_relaxed_points, tiny_instances

from gnepconv.core import FiniteGnep, StrategyProfile
from gnepconv.fixtures import example2
from gnepconv.flowgame import (BILINEAR, CdfgInstance, enumerate_integral_flows, generate_instance,
                               iter_joint_profiles, relaxed_joint_set_oracle)
from gnepconv.nikaido import (ALPHA, BETA, CONVEXIFIED, InfeasibleProfile, as_array, convexify,
                              is_gne, penalty_factor, penalty_gradient, psi, v_alpha, v_bar, v_hat)
from gnepconv.solvers import solve_reformulation_exhaustive


def linear_one_player(points=range(4)):
    return FiniteGnep([1], [{(): [(v,) for v in points]}], lambda i, x: 2 * x[0][0],
                      cost_vector=lambda i, rivals: (2,))


def parallel_pair():
    # two parallel arcs; each player pays 1 on arc 0 and 3 on arc 1, plus 2 per unit of rival load
    c1 = [[[2, 0], [0, 2]]] * 2
    return CdfgInstance(["s", "t"], [("s", "t"), ("s", "t")], [2, 2], [("s", "t", 1)] * 2, BILINEAR,
                        c1=c1, c2=[[1, 3], [1, 3]])


def brute_v_hat(inst, x):
    total = 0
    for i in range(inst.n):
        rivals = x.rivals(i)
        C = inst.cost_vector(i, rivals)
        best = min(sum(c * v for c, v in zip(C, f)) for f in enumerate_integral_flows(inst, i, inst.residual(i, rivals)))
        total += inst.cost(i, x) - best
    return total


# -- Psi --------------------------------------------------------------------------------


def test_psi_linear_one_player():
    assert psi(linear_one_player(), [(3,)], [(1,)]) == 4


def test_psi_example2():
    assert psi(example2(), [(2,), (1,)], [(2,), (0,)]) == 1


@given(tiny_instances())
def test_psi_vanishes_on_the_diagonal(inst):
    for x in itertools.islice(iter_joint_profiles(inst), 20):
        assert psi(inst, x, x) == 0


# -- V^ ---------------------------------------------------------------------------------


def test_v_hat_parallel_pair_by_enumeration():
    inst = parallel_pair()
    x = next(p for p in iter_joint_profiles(inst) if p.blocks == ((1, 0), (1, 0)))
    ev = v_hat(inst, x)
    # each player pays 1+2 = 3 on the shared arc and could pay 3 alone on arc 1: no gain
    assert ev.value == brute_v_hat(inst, x) == 0
    y = next(p for p in iter_joint_profiles(inst) if p.blocks == ((0, 1), (0, 1)))
    assert v_hat(inst, y).value == brute_v_hat(inst, y) == 2 * (5 - 1)


def test_v_hat_zero_at_gne_and_rejects_infeasible():
    g = linear_one_player()
    assert v_hat(g, [(0,)]).value == 0
    assert v_hat(g, [(2,)]).value == 4
    with pytest.raises(InfeasibleProfile):
        v_hat(g, [(9,)])
    with pytest.raises(ValueError):
        v_hat(g, [(0,)], mode="concave")


@given(tiny_instances())
def test_ni_inequalities(inst):
    for x in itertools.islice(iter_joint_profiles(inst), 30):
        orig = v_hat(inst, x).value
        conv = v_hat(inst, x, CONVEXIFIED).value
        assert orig == brute_v_hat(inst, x)
        assert 0 <= conv <= orig


@given(tiny_instances())
def test_gne_iff_convexified_gap_vanishes(inst):
    for x in itertools.islice(iter_joint_profiles(inst), 30):
        assert is_gne(inst, x) == (v_hat(inst, x, CONVEXIFIED).value == 0)


@given(tiny_instances())
def test_second_convexification_changes_nothing(inst):
    once, twice = convexify(inst), convexify(convexify(inst))
    for x in itertools.islice(iter_joint_profiles(inst), 10):
        assert v_hat(once, x).value == v_hat(twice, x).value == v_hat(inst, x, CONVEXIFIED).value


def test_convexified_table_game():
    g = FiniteGnep.jointly_constrained([(0, 0), (2, 0), (0, 2)], cost=lambda i, x: -x[i][0],
                                       cost_vector=lambda i, rivals: (-1,))
    # at (0,0) each player can move to 2 alone: gap 2 + 2 in both readings
    assert v_hat(g, [(0,), (0,)]).value == 4
    assert v_hat(g, [(0,), (0,)], CONVEXIFIED).value == 4
    # the hulls live on the refined domain, so a fractional rival has no slice
    assert not convexify(g).contains([(Fraction(1, 2),), (0,)])
    one = convexify(linear_one_player())
    assert one.contains([(Fraction(3, 2),)])
    assert not one.contains([(Fraction(7, 2),)])
    with pytest.raises(ValueError):
        convexify(example2())


# -- is_gne -----------------------------------------------------------------------------


def test_is_gne_examples():
    g = linear_one_player()
    assert is_gne(g, [(0,)])
    assert not is_gne(g, [(1,)])
    assert not is_gne(g, [(7,)])


def test_example2_equilibria_by_hand():
    g = example2()
    expected = set()
    for x in [StrategyProfile([(1,), (2,)]), StrategyProfile([(2,), (1,)])]:
        ok = True
        for i in range(2):
            cur = g.cost(i, x)
            for y in g.strategies(i, x.rivals(i)):
                if g.cost(i, x.replace(i, y)) < cur:
                    ok = False
        if ok:
            expected.add(x)
    assert expected
    assert {x for x in [StrategyProfile([(1,), (2,)]), StrategyProfile([(2,), (1,)])] if is_gne(g, x)} == expected


# -- regularized gaps ---------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(3))
def test_v_alpha_below_convexified_gap(seed):
    inst = generate_instance(8, 2, "multi", "unit", seed)
    for x in exact_relaxed_points(inst, 5, seed):
        assert convexify(inst).contains(x)
        conv = v_hat(convexify(inst), x).value
        assert v_alpha(inst, x, ALPHA).value <= float(conv) + 1e-6


def test_v_alpha_and_v_bar_vanish_at_an_equilibrium():
    inst = generate_instance(8, 2, "single", "unit", 4)
    x = solve_reformulation_exhaustive(inst).profile
    assert is_gne(inst, x)
    assert abs(v_alpha(inst, x).value) <= 1e-6
    oracle = relaxed_joint_set_oracle(inst)
    assert abs(v_bar(inst, x, projector=oracle.project_qp).value) <= 1e-6
    assert abs(v_bar(inst, x).value) <= 1e-6


def test_parameter_validation():
    inst = parallel_pair()
    with pytest.raises(ValueError):
        v_alpha(inst, [(1, 0), (1, 0)], alpha=0)
    with pytest.raises(ValueError):
        v_bar(inst, [(1, 0), (1, 0)], alpha=BETA, beta=ALPHA)
    with pytest.raises(ValueError):
        v_bar(inst, [(1, 0), (1, 0)], c=-1)


def _direct_regularized(inst, X, P, gamma):
    """``sum_i [C_i.x_i - min_y (C_i.y + gamma/2 |y - x_i|^2)]`` with slices fixed at ``P``."""
    A = np.array(inst.incidence, float)
    keep = list(range(1, A.shape[0]))
    D = np.array([inst.interaction(i)[0] for i in range(inst.n)], float)
    g = np.array([inst.interaction(i)[1] for i in range(inst.n)], float)
    total = 0.0
    for i in range(inst.n):
        load = X.sum(axis=0) - X[i]
        C = load @ D[i] + g[i]
        res = np.array(inst.capacities, float) - (P.sum(axis=0) - P[i])
        m = inst.m
        G = np.vstack([np.eye(m), -np.eye(m)])
        h = np.concatenate([res + 1e-7, np.zeros(m)])
        b = np.array(inst.supply(i), float)
        sol = solvers.qp(matrix(gamma * np.eye(m)), matrix(C - gamma * X[i]), matrix(G), matrix(h),
                         matrix(A[keep]), matrix(b[keep]),
                         options={"show_progress": False, "abstol": 1e-11, "reltol": 1e-11, "feastol": 1e-11})
        y = np.array(sol["x"]).ravel()
        q = C @ y + 0.5 * gamma * np.sum((y - X[i]) ** 2)
        total += C @ X[i] - q
    return total


@pytest.mark.parametrize("seed", range(3))
def test_v_bar_matches_direct_formula(seed):
    inst = generate_instance(6, 2, "single", "unit", seed)
    oracle = relaxed_joint_set_oracle(inst)
    rng = np.random.default_rng(seed)
    for _ in range(3):
        X = rng.uniform(-1, 2, size=(inst.n, inst.m))
        P = oracle.project_qp(X.ravel()).reshape(X.shape)
        c = 0.5
        expected = (_direct_regularized(inst, X, P, ALPHA) - _direct_regularized(inst, X, P, BETA)
                    + c * np.sum((X - P) ** 2))
        got = v_bar(inst, X, c=c, projector=oracle.project_qp, tol=1e-9).value
        assert got == pytest.approx(expected, abs=1e-5)


# -- penalizer -------------------------------------------------------------------------------


def test_penalty_examples():
    assert penalty_factor([[0, 1], [2, 3]], 2, 2) == 1
    assert penalty_factor([[0.5, 1], [2, 3]], 2, 2) == pytest.approx(1 + 1 / 4)
    assert penalty_factor([[0.5, 0.5], [1.5, -0.5]], 2, 2) == pytest.approx(2)


@given(st.lists(st.floats(-20, 20, allow_nan=False), min_size=6, max_size=6))
def test_penalty_range(values):
    p = penalty_factor(values, 3, 2)
    if all(float(v).is_integer() for v in values):
        assert p == 1
    else:
        assert 1 < p <= 2 or p == pytest.approx(1)


@given(st.lists(st.integers(-50, 50), min_size=4, max_size=4))
def test_penalty_exactly_one_on_integers(values):
    assert penalty_factor(values, 2, 2) == 1.0


def test_penalty_gradient_by_finite_differences():
    X = np.array([[0.3, 1.7], [2.2, 0.9]])
    g = penalty_gradient(X, 2, 2)
    h = 1e-6
    for idx in np.ndindex(X.shape):
        E = np.zeros_like(X)
        E[idx] = h
        fd = (penalty_factor(X + E, 2, 2) - penalty_factor(X - E, 2, 2)) / (2 * h)
        assert g[idx] == pytest.approx(fd, abs=1e-6)


def test_as_array_shape_check():
    inst = parallel_pair()
    assert as_array(inst, [(1, 0), (0, 1)]).shape == (2, 2)
    with pytest.raises(ValueError):
        as_array(inst, [1, 0, 0])
