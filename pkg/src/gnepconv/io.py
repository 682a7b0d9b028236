"""JSON formats for flow-game instances and finite point-set games.

Instance documents::

    {"schema": "gnepconv.cdfg", "version": 1,
     "nodes": [...], "arcs": [[u, v], ...], "capacities": [...],
     "players": [{"source": s, "sink": t, "demand": d}, ...],
     "costs": {"kind": "bilinear", "c1": [[[...]]], "c2": [[...]]}
           | {"kind": "congestion", "diagonal": [[...]]},
     "meta": {...}}

Finite games come either as a jointly constrained point set
(``"kind": "points"``) or as explicit strategy tables (``"kind": "tables"``).
Rational coordinates may be written as strings such as ``"5/2"``.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Union

from .core import FiniteGnep
from .flowgame import BILINEAR, CONGESTION, CdfgInstance, Player

INSTANCE_SCHEMA = "gnepconv.cdfg"
GAME_SCHEMA = "gnepconv.finite"
SCHEMA_VERSION = 1


class FormatError(ValueError):
    """Schema violation; ``location`` is a JSON path such as ``$.players[1].demand``."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _loads(text: str, where: str = "$"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{where} line {exc.lineno} column {exc.colno}", exc.msg) from None


def _plain(v):
    """Meta values as JSON-stable plain data."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if hasattr(v, "item"):
        return v.item()
    return v


# -- field access with locations --------------------------------------------


def _get(doc, key, loc):
    if not isinstance(doc, dict):
        raise FormatError(loc, "expected an object")
    if key not in doc:
        raise FormatError(f"{loc}.{key}", "missing field")
    return doc[key]


def _list(v, loc, length=None):
    if not isinstance(v, list):
        raise FormatError(loc, "expected an array")
    if length is not None and len(v) != length:
        raise FormatError(loc, f"expected {length} entries, found {len(v)}")
    return v


def _int(v, loc, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise FormatError(loc, f"expected an integer, found {v!r}")
    if minimum is not None and v < minimum:
        raise FormatError(loc, f"must be >= {minimum}")
    return v


def _rational(v, loc):
    if isinstance(v, bool):
        raise FormatError(loc, "expected a number")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        try:
            f = Fraction(v)
        except ValueError:
            raise FormatError(loc, f"not a rational number: {v!r}") from None
        return int(f) if f.denominator == 1 else f
    raise FormatError(loc, f"expected an integer or a rational string, found {v!r}")


def _label(v, loc):
    if isinstance(v, bool) or not isinstance(v, (int, str)):
        raise FormatError(loc, "node labels must be integers or strings")
    return v


def _check_schema(doc, schema, loc="$"):
    got = _get(doc, "schema", loc)
    if got != schema:
        raise FormatError(f"{loc}.schema", f"expected {schema!r}, found {got!r}")
    ver = _get(doc, "version", loc)
    if ver != SCHEMA_VERSION:
        raise FormatError(f"{loc}.version", f"unsupported version {ver!r}")


# -- instances --------------------------------------------------------------


def instance_to_dict(inst: CdfgInstance) -> dict:
    if inst.cost_kind == BILINEAR:
        costs = {"kind": BILINEAR, "c1": [[list(r) for r in mat] for mat in inst.c1],
                 "c2": [list(v) for v in inst.c2]}
    else:
        costs = {"kind": CONGESTION, "diagonal": [list(w) for w in inst.congestion]}
    return {
        "schema": INSTANCE_SCHEMA,
        "version": SCHEMA_VERSION,
        "nodes": list(inst.nodes),
        "arcs": [list(a) for a in inst.arcs],
        "capacities": list(inst.capacities),
        "players": [{"source": p.source, "sink": p.sink, "demand": p.demand} for p in inst.players],
        "costs": costs,
        "meta": _plain(inst.meta),
    }


def instance_from_dict(doc: Any) -> CdfgInstance:
    _check_schema(doc, INSTANCE_SCHEMA)
    nodes = [_label(v, f"$.nodes[{k}]") for k, v in enumerate(_list(_get(doc, "nodes", "$"), "$.nodes"))]
    arcs = []
    for k, a in enumerate(_list(_get(doc, "arcs", "$"), "$.arcs")):
        a = _list(a, f"$.arcs[{k}]", 2)
        arcs.append((_label(a[0], f"$.arcs[{k}][0]"), _label(a[1], f"$.arcs[{k}][1]")))
    m = len(arcs)
    caps = [_int(c, f"$.capacities[{k}]", 0)
            for k, c in enumerate(_list(_get(doc, "capacities", "$"), "$.capacities", m))]
    players = []
    for k, p in enumerate(_list(_get(doc, "players", "$"), "$.players")):
        loc = f"$.players[{k}]"
        players.append(Player(_label(_get(p, "source", loc), f"{loc}.source"),
                              _label(_get(p, "sink", loc), f"{loc}.sink"),
                              _int(_get(p, "demand", loc), f"{loc}.demand", 0)))
    n = len(players)
    costs = _get(doc, "costs", "$")
    kind = _get(costs, "kind", "$.costs")
    kw = {}
    if kind == BILINEAR:
        c1 = _list(_get(costs, "c1", "$.costs"), "$.costs.c1", n)
        c2 = _list(_get(costs, "c2", "$.costs"), "$.costs.c2", n)
        kw["c1"] = [[[_int(v, f"$.costs.c1[{i}][{r}][{s}]") for s, v in
                      enumerate(_list(row, f"$.costs.c1[{i}][{r}]", m))]
                     for r, row in enumerate(_list(mat, f"$.costs.c1[{i}]", m))]
                    for i, mat in enumerate(c1)]
        kw["c2"] = [[_int(v, f"$.costs.c2[{i}][{a}]") for a, v in enumerate(_list(vec, f"$.costs.c2[{i}]", m))]
                    for i, vec in enumerate(c2)]
    elif kind == CONGESTION:
        diag = _list(_get(costs, "diagonal", "$.costs"), "$.costs.diagonal", n)
        kw["congestion"] = [[_int(v, f"$.costs.diagonal[{i}][{a}]")
                             for a, v in enumerate(_list(w, f"$.costs.diagonal[{i}]", m))]
                            for i, w in enumerate(diag)]
    else:
        raise FormatError("$.costs.kind", f"unknown cost kind {kind!r}")
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise FormatError("$.meta", "expected an object")
    try:
        return CdfgInstance(nodes, arcs, caps, players, kind, meta=meta, **kw)
    except ValueError as exc:
        raise FormatError("$", str(exc)) from None


def dumps_instance(inst: CdfgInstance) -> str:
    return _dump(instance_to_dict(inst))


def loads_instance(text: str) -> CdfgInstance:
    return instance_from_dict(_loads(text))


def save_instance(inst: CdfgInstance, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_instance(inst))


def load_instance(path: Union[str, Path]) -> CdfgInstance:
    return loads_instance(Path(path).read_text())


# -- finite games ------------------------------------------------------------


def _coord_out(v):
    return v if isinstance(v, int) else str(v)


def _block_in(v, loc, k):
    v = _list(v, loc, k)
    return tuple(_rational(c, f"{loc}[{t}]") for t, c in enumerate(v))


def game_from_dict(doc: Any) -> FiniteGnep:
    """Finite game with zero costs (costs are not part of the file format)."""
    _check_schema(doc, GAME_SCHEMA)
    dims = [_int(k, f"$.dims[{t}]", 1) for t, k in enumerate(_list(_get(doc, "dims", "$"), "$.dims"))]
    name = doc.get("name", "")
    kind = _get(doc, "kind", "$")
    if kind == "points":
        pts = [_block_in(p, f"$.points[{t}]", sum(dims))
               for t, p in enumerate(_list(_get(doc, "points", "$"), "$.points"))]
        return FiniteGnep.jointly_constrained(pts, dims=dims, name=name)
    if kind == "tables":
        raw = _list(_get(doc, "tables", "$"), "$.tables", len(dims))
        tables = []
        for i, entries in enumerate(raw):
            others = [dims[j] for j in range(len(dims)) if j != i]
            t = {}
            for e, entry in enumerate(_list(entries, f"$.tables[{i}]")):
                loc = f"$.tables[{i}][{e}]"
                rv = _list(_get(entry, "rivals", loc), f"{loc}.rivals", len(others))
                key = tuple(_block_in(b, f"{loc}.rivals[{r}]", k) for r, (b, k) in enumerate(zip(rv, others)))
                st = _list(_get(entry, "strategies", loc), f"{loc}.strategies")
                t[key] = [_block_in(b, f"{loc}.strategies[{s}]", dims[i]) for s, b in enumerate(st)]
            tables.append(t)
        return FiniteGnep(dims, tables, lambda i, x: 0, name=name)
    raise FormatError("$.kind", f"expected 'points' or 'tables', found {kind!r}")


def game_to_dict(game: FiniteGnep) -> dict:
    """Tables form of any finite game; costs are dropped."""
    tables = []
    for i in range(game.n):
        tables.append([{"rivals": [[_coord_out(c) for c in b] for b in key],
                        "strategies": [[_coord_out(c) for c in b] for b in sorted(game.strategies(i, key))]}
                       for key in game.rival_grid(i)])
    return {"schema": GAME_SCHEMA, "version": SCHEMA_VERSION, "name": game.name,
            "dims": list(game.dims), "kind": "tables", "tables": tables}


def loads_game(text: str) -> FiniteGnep:
    return game_from_dict(_loads(text))


def load_game(path: Union[str, Path]) -> FiniteGnep:
    return loads_game(Path(path).read_text())


def dumps_game(game: FiniteGnep) -> str:
    return _dump(game_to_dict(game))


def load_any(path: Union[str, Path]):
    """Instance or finite game, dispatched on the ``schema`` field."""
    doc = _loads(Path(path).read_text())
    schema = doc.get("schema") if isinstance(doc, dict) else None
    if schema == INSTANCE_SCHEMA:
        return instance_from_dict(doc)
    if schema == GAME_SCHEMA:
        return game_from_dict(doc)
    raise FormatError("$.schema", f"unknown schema {schema!r}")
