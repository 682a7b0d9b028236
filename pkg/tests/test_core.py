from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnepconv.core import (FiniteGnep, StrategyProfile, enumerate_feasible_profiles, is_feasible,
                           player_cost, refined_domain)
from gnepconv.fixtures import example2
from gnepconv.flowgame import CONGESTION, CdfgInstance


def test_profile_normalizes_coordinates():
    x = StrategyProfile([(Fraction(4, 2),), (Fraction(1, 3), 1.5)])
    assert x.blocks == ((2,), (Fraction(1, 3), Fraction(3, 2)))
    assert isinstance(x[0][0], int)
    assert x.dims == (1, 2)
    assert not x.is_integral()
    assert x.rivals(0) == ((Fraction(1, 3), Fraction(3, 2)),)


def test_profile_rejects_booleans():
    with pytest.raises(TypeError):
        StrategyProfile([(True,)])


def test_example2_feasibility():
    g = example2()
    assert is_feasible(g, [(2,), (1,)])
    assert not is_feasible(g, [(2,), (3,)])


def test_wrong_block_length_is_an_error():
    with pytest.raises(ValueError):
        is_feasible(example2(), [(2, 1), (1,)])
    with pytest.raises(ValueError):
        is_feasible(example2(), [(2,)])


def test_example2_enumeration_and_refined_domains():
    g = example2()
    assert enumerate_feasible_profiles(g) == [StrategyProfile([(1,), (2,)]), StrategyProfile([(2,), (1,)])]
    assert refined_domain(g, 1) == {((1,),), ((2,),)}
    # direct evaluation of the listed constraints gives {1, 2}, not {1, 2, 3}
    assert refined_domain(g, 0) == {((1,),), ((2,),)}


def test_example2_costs():
    g = example2()
    assert player_cost(g, 0, [(2,), (1,)]) == 2
    assert player_cost(g, 1, [(1,), (3,)]) == 1
    assert player_cost(g, 1, [(0,), (1,)]) == Fraction(1, 2)


def test_one_player_and_empty_games():
    one = FiniteGnep([1], [{(): [(0,), (1,)]}], lambda i, x: 0)
    assert enumerate_feasible_profiles(one) == [StrategyProfile([(0,)]), StrategyProfile([(1,)])]
    assert refined_domain(one, 0) == {()}
    empty = FiniteGnep([1, 1], [{}, {}], lambda i, x: 0)
    assert enumerate_feasible_profiles(empty) == []
    assert refined_domain(empty, 1) == set()
    nothing = FiniteGnep([1], [{}], lambda i, x: 0)
    assert refined_domain(nothing, 0) == set()


def test_refined_domain_index_checked():
    with pytest.raises(IndexError):
        refined_domain(example2(), 2)


def test_table_validation():
    with pytest.raises(ValueError):
        FiniteGnep([1, 1], [{((1,),): [(1, 2)]}, {}], lambda i, x: 0)
    with pytest.raises(ValueError):
        FiniteGnep([1, 1], [{((1,), (2,)): [(1,)]}, {}], lambda i, x: 0)
    with pytest.raises(ValueError):
        FiniteGnep([1], [{}, {}], lambda i, x: 0)


def test_zero_flow_costs_nothing():
    inst = CdfgInstance(["s", "t"], [("s", "t")], [2], [("s", "t", 1), ("s", "t", 1)], CONGESTION,
                        congestion=[[3], [5]])
    assert player_cost(FiniteGnep(inst.dims, [{}, {}], inst.cost), 0, [(0,), (0,)]) == 0


# -- properties -----------------------------------------------------------------

points_2d = st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=0, max_size=10)


def _random_game(data):
    """Two players on a 0..3 grid with independent random tables."""
    grid = [(v,) for v in range(4)]
    tables = []
    for _ in range(2):
        t = {}
        for key in grid:
            pts = data.draw(st.sets(st.sampled_from(grid), max_size=3))
            if pts:
                t[(key,)] = pts
        tables.append(t)
    return FiniteGnep([1, 1], tables, lambda i, x: 0)


@given(st.data())
def test_enumeration_matches_grid_scan(data):
    g = _random_game(data)
    grid = [StrategyProfile([(a,), (b,)]) for a in range(4) for b in range(4)]
    assert enumerate_feasible_profiles(g) == sorted(x for x in grid if is_feasible(g, x))


@given(st.data())
def test_feasible_profiles_lie_in_refined_domains(data):
    g = _random_game(data)
    for x in enumerate_feasible_profiles(g):
        for i in range(g.n):
            assert x.rivals(i) in refined_domain(g, i)


@given(st.data())
def test_refined_domain_inside_domain(data):
    g = _random_game(data)
    for i in range(g.n):
        for key in refined_domain(g, i):
            assert g.strategies(i, key)


@given(points_2d)
def test_jointly_constrained_slices(points):
    g = FiniteGnep.jointly_constrained(points)
    assert set(enumerate_feasible_profiles(g)) == {StrategyProfile([(a,), (b,)]) for a, b in points}
