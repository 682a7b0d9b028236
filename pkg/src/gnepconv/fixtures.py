"""Small reference games used by the tests, the docs and ``gnepconv check``.

Point-set games ship as JSON under ``gnepconv/data``; the two-player game
with nonlinear costs is built from its constraint system.
"""
from __future__ import annotations

from fractions import Fraction
from importlib import resources

from .core import FiniteGnep
from .flowgame import CdfgInstance
from .io import loads_game, loads_instance

GAME_FILES = {
    "strong-jc": "strong_jc.json",
    "kovskoe": "kovskoe.json",
    "joint-constr": "joint_constr.json",
    "rectangle": "rectangle.json",
    "zero-one-congestion": "zero_one_congestion.json",
    "not-jc": "not_jc.json",
}
INSTANCE_FILES = {
    "figure-cdfg": "figure_cdfg.json",
}


def data_text(filename: str) -> str:
    return resources.files("gnepconv").joinpath("data", filename).read_text()


def data_path(filename: str):
    return resources.files("gnepconv").joinpath("data", filename)


def load_fixture_game(name: str) -> FiniteGnep:
    try:
        return loads_game(data_text(GAME_FILES[name]))
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {sorted(GAME_FILES)}") from None


def load_fixture_instance(name: str) -> CdfgInstance:
    return loads_instance(data_text(INSTANCE_FILES[name]))


# -- two players, one coordinate each, nonlinear costs ------------------------

EXAMPLE2_BOX = ([(-1, 4)], [(0, 4)])


def _example2_admissible(i, y, rivals):
    (v,), ((r,),) = y, rivals
    if i == 0:
        return (v - 2) ** 2 + (r - 2) ** 2 <= 1
    return v >= 0 and v + r >= 2 and 2 * v - r <= 5 and v + 2 * r <= 5


def _example2_cost(i, x):
    (x1,), (x2,) = x.blocks
    if i == 0:
        return x1 * x2
    return Fraction(1 + abs(x2)) ** (x1 - 1)


def example2() -> FiniteGnep:
    """Disc constraint for player 1, three half-planes for player 2.

    Player 1 pays ``x1*x2`` and player 2 pays ``(1+|x2|)^(x1-1)``. The
    integral grid is limited to ``x1 in [-1, 4]`` and ``x2 in [0, 4]``, which
    contains every nonempty strategy set.
    """
    return FiniteGnep.from_constraints(EXAMPLE2_BOX, _example2_admissible, _example2_cost, name="example-2")


# -- figure flow game ---------------------------------------------------------

FIGURE_PATHS = {
    "x1_star": [("s1", "t1")],
    "x1_upper": [("s1", 5), (5, 6), (6, 7), (7, 8), (8, "t1")],
    "x1_lower": [("s1", 1), (1, 2), (2, 3), (3, 4), (4, "t1")],
    "x2_upper": [("s2", 7), (7, 8), (8, 1), (1, 2), (2, "t2")],
    "x2_lower": [("s2", 3), (3, 4), (4, 5), (5, 6), (6, "t2")],
}


def path_flow(inst: CdfgInstance, path) -> tuple:
    """Unit flow along a path given as a list of arcs."""
    index = {a: k for k, a in enumerate(inst.arcs)}
    flow = [0] * inst.m
    for a in path:
        flow[index[tuple(a)]] += 1
    return tuple(flow)


def figure_paths(inst: CdfgInstance) -> dict:
    return {name: path_flow(inst, p) for name, p in FIGURE_PATHS.items()}
