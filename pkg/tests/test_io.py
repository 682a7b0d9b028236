import json

import pytest
from conftest import DATA
from hypothesis import given
from strategies import tiny_instances

from gnepconv.core import enumerate_feasible_profiles, refined_domain
from gnepconv.fixtures import example2, load_fixture_game, load_fixture_instance
from gnepconv.flowgame import CONGESTION, generate_instance
from gnepconv.io import (FormatError, dumps_game, dumps_instance, instance_to_dict, load_any,
                         loads_game, loads_instance)


@pytest.mark.parametrize("seed", range(50))
def test_generated_instances_round_trip(seed):
    mode = "random" if seed % 2 else "unit"
    inst = generate_instance(6, 2 + seed % 2, "multi" if seed % 3 else "single", mode, seed)
    text = dumps_instance(inst)
    back = loads_instance(text)
    assert dumps_instance(back) == text
    assert back.capacities == inst.capacities and back.players == inst.players
    assert back.cost_vector(0, [(0,) * inst.m] * (inst.n - 1)) == inst.cost_vector(0, [(0,) * inst.m] * (inst.n - 1))


@given(tiny_instances(nonempty=False))
def test_tiny_instances_round_trip(inst):
    assert dumps_instance(loads_instance(dumps_instance(inst))) == dumps_instance(inst)


def _broken(mutate):
    doc = instance_to_dict(load_fixture_instance("figure-cdfg"))
    mutate(doc)
    return json.dumps(doc)


@pytest.mark.parametrize("mutate, location", [
    (lambda d: d.pop("capacities"), "$.capacities"),
    (lambda d: d["players"][1].pop("demand"), "$.players[1].demand"),
    (lambda d: d["capacities"].pop(), "$.capacities"),
    (lambda d: d["capacities"].__setitem__(3, -1), "$.capacities[3]"),
    (lambda d: d["capacities"].__setitem__(0, True), "$.capacities[0]"),
    (lambda d: d["costs"].__setitem__("kind", "quadratic"), "$.costs.kind"),
    (lambda d: d.__setitem__("version", 7), "$.version"),
])
def test_malformed_instances_name_the_location(mutate, location):
    with pytest.raises(FormatError) as err:
        loads_instance(_broken(mutate))
    assert err.value.location == location
    assert location in str(err.value)


def test_unknown_arc_endpoint_is_reported():
    with pytest.raises(FormatError):
        loads_instance(_broken(lambda d: d["arcs"].append(["s1", "nowhere"]) or d["capacities"].append(1)
                               or [c.append(0) for c in d["costs"]["diagonal"]]))


def test_invalid_json_reports_line_and_column():
    with pytest.raises(FormatError) as err:
        loads_instance('{"schema": ')
    assert "line 1" in err.value.location


def test_figure_fixture_shape():
    inst = load_fixture_instance("figure-cdfg")
    assert inst.n == 2 and inst.m == 17
    assert [p.demand for p in inst.players] == [1, 1]
    assert inst.cost_kind == CONGESTION


def test_game_fixtures_round_trip_through_tables():
    for name in ("strong-jc", "kovskoe", "joint-constr", "rectangle", "zero-one-congestion"):
        g = load_fixture_game(name)
        back = loads_game(dumps_game(g))
        assert enumerate_feasible_profiles(back) == enumerate_feasible_profiles(g)
        assert back.name == g.name


def test_table_games_keep_their_refined_domains():
    g = example2()
    back = loads_game(dumps_game(g))
    assert enumerate_feasible_profiles(back) == enumerate_feasible_profiles(g)
    for i in range(2):
        assert refined_domain(back, i) == refined_domain(g, i)


def test_rational_coordinates_survive():
    doc = {"schema": "gnepconv.finite", "version": 1, "dims": [1, 1], "kind": "points",
           "points": [[0, "1/2"], [1, 1]]}
    g = loads_game(json.dumps(doc))
    assert "1/2" in dumps_game(g)
    doc["points"][0][1] = "half"
    with pytest.raises(FormatError) as err:
        loads_game(json.dumps(doc))
    assert err.value.location == "$.points[0][1]"


def test_load_any_dispatches_on_schema(tmp_path):
    assert load_any(DATA / "matching_pennies.json").n == 2
    p = tmp_path / "g.json"
    p.write_text(dumps_game(load_fixture_game("rectangle")))
    assert load_any(p).dims == (1, 1)
    p.write_text('{"schema": "other"}')
    with pytest.raises(FormatError):
        load_any(p)
