"""Finite-strategy GNEPs: profiles, feasibility, enumeration, refined domains.

Strategy sets are explicit tables. For player ``i`` the table maps a rival
profile (the tuple of the other players' blocks, in player order) to the
finite set of admissible blocks; a missing key means the empty set.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence


def _num(v):
    if isinstance(v, bool):
        raise TypeError("booleans are not valid coordinates")
    if isinstance(v, int):
        return v
    f = Fraction(v)
    return int(f) if f.denominator == 1 else f


def as_block(v) -> tuple:
    if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
        return (_num(v),)
    return tuple(_num(c) for c in v)


@dataclass(frozen=True, order=True)
class StrategyProfile:
    """A block vector ``x = (x_1, ..., x_n)`` with rational coordinates."""

    blocks: tuple

    def __init__(self, blocks: Iterable):
        object.__setattr__(self, "blocks", tuple(as_block(b) for b in blocks))

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    def __iter__(self):
        return iter(self.blocks)

    def __repr__(self):
        return f"StrategyProfile({self.blocks!r})"

    @property
    def dims(self) -> tuple:
        return tuple(len(b) for b in self.blocks)

    def rivals(self, i: int) -> tuple:
        """The rival profile ``x_{-i}`` as a tuple of blocks."""
        return self.blocks[:i] + self.blocks[i + 1:]

    def replace(self, i: int, block) -> "StrategyProfile":
        return StrategyProfile(self.blocks[:i] + (as_block(block),) + self.blocks[i + 1:])

    def flat(self) -> tuple:
        return tuple(c for b in self.blocks for c in b)

    def is_integral(self) -> bool:
        return all(isinstance(c, int) for c in self.flat())


def assemble(i: int, block, rivals: Sequence) -> StrategyProfile:
    """Insert player ``i``'s block into a rival profile."""
    rivals = tuple(rivals)
    return StrategyProfile(rivals[:i] + (block,) + rivals[i:])


def check_dims(dims: Sequence[int], x: StrategyProfile) -> None:
    if len(x) != len(dims):
        raise ValueError(f"profile has {len(x)} blocks, game has {len(dims)} players")
    for i, (b, k) in enumerate(zip(x.blocks, dims)):
        if len(b) != k:
            raise ValueError(f"block {i} has length {len(b)}, expected {k}")


CostOracle = Callable[[int, StrategyProfile], object]
CostVectorOracle = Callable[[int, tuple], Sequence]


class FiniteGnep:
    """Explicit finite-strategy GNEP.

    ``tables[i]`` maps a rival key to the admissible blocks of player ``i``.
    ``cost(i, x)`` returns the exact cost of player ``i`` at profile ``x``.
    ``cost_vector(i, rivals)``, when given, states that player ``i``'s cost is
    linear in its own block with that coefficient vector; it enables the
    convexified evaluations.
    """

    def __init__(self, dims: Sequence[int], tables: Sequence[Mapping], cost: CostOracle,
                 cost_vector: Optional[CostVectorOracle] = None, name: str = ""):
        self.dims = tuple(int(k) for k in dims)
        self.n = len(self.dims)
        if len(tables) != self.n:
            raise ValueError("one strategy table per player is required")
        norm = []
        for i, table in enumerate(tables):
            t = {}
            for key, pts in table.items():
                key = tuple(as_block(b) for b in key)
                if len(key) != self.n - 1:
                    raise ValueError(f"rival key {key} of player {i} has wrong length")
                for j, b in zip([j for j in range(self.n) if j != i], key):
                    if len(b) != self.dims[j]:
                        raise ValueError(f"rival key {key} of player {i} has wrong block sizes")
                blocks = frozenset(as_block(p) for p in pts)
                for b in blocks:
                    if len(b) != self.dims[i]:
                        raise ValueError(f"strategy {b} of player {i} has dimension {len(b)}")
                if blocks:
                    t[key] = blocks
            norm.append(t)
        self.tables = tuple(norm)
        self.cost = cost
        self.cost_vector = cost_vector
        self.name = name
        self._feasible = None

    def strategies(self, i: int, rivals: Sequence) -> frozenset:
        return self.tables[i].get(tuple(rivals), frozenset())

    def rival_grid(self, i: int) -> list:
        return sorted(self.tables[i])

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_constraints(cls, boxes: Sequence[Sequence[tuple]],
                         admissible: Callable[[int, tuple, tuple], bool],
                         cost: CostOracle, cost_vector: Optional[CostVectorOracle] = None,
                         name: str = "") -> "FiniteGnep":
        """Tabulate a constraint system over integral bounding boxes.

        ``boxes[i]`` lists ``(lo, hi)`` per coordinate of player ``i``;
        ``admissible(i, y_i, rivals)`` decides ``y_i in X_i(rivals)``.
        """
        grids = [list(itertools.product(*[range(lo, hi + 1) for lo, hi in box])) for box in boxes]
        n = len(grids)
        tables = []
        for i in range(n):
            t = {}
            rival_grids = [grids[j] for j in range(n) if j != i]
            for key in itertools.product(*rival_grids):
                pts = [y for y in grids[i] if admissible(i, y, key)]
                if pts:
                    t[key] = pts
            tables.append(t)
        return cls([len(box) for box in boxes], tables, cost, cost_vector, name)

    @classmethod
    def jointly_constrained(cls, points: Iterable, dims: Optional[Sequence[int]] = None,
                            cost: Optional[CostOracle] = None,
                            cost_vector: Optional[CostVectorOracle] = None,
                            name: str = "") -> "FiniteGnep":
        """Game whose strategy sets are the slices of one finite set ``X``.

        Points are flat coordinate tuples split by ``dims`` (default: one
        coordinate per player). Without a cost the game has zero costs.
        """
        pts = [tuple(_num(c) for c in p) for p in points]
        if dims is None:
            dims = (1,) * (len(pts[0]) if pts else 0)
        dims = tuple(dims)
        offs = [0]
        for k in dims:
            offs.append(offs[-1] + k)
        profiles = [StrategyProfile([p[offs[i]:offs[i + 1]] for i in range(len(dims))]) for p in pts]
        tables = [dict() for _ in dims]
        for x in profiles:
            for i in range(len(dims)):
                tables[i].setdefault(x.rivals(i), set()).add(x[i])
        if cost is None:
            cost = lambda i, x: 0  # noqa: E731
        return cls(dims, tables, cost, cost_vector, name)

    # ---------------------------------------------------------------------

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"FiniteGnep{label}(n={self.n}, dims={self.dims})"


def _profile(game, x) -> StrategyProfile:
    x = x if isinstance(x, StrategyProfile) else StrategyProfile(x)
    check_dims(game.dims, x)
    return x


def is_feasible(game: FiniteGnep, x) -> bool:
    x = _profile(game, x)
    return all(x[i] in game.strategies(i, x.rivals(i)) for i in range(game.n))


def enumerate_feasible_profiles(game: FiniteGnep) -> list:
    """All ``x`` with ``x in X(x)``, in lexicographic order."""
    if game._feasible is None:
        out = set()
        if game.n:
            for key, blocks in game.tables[0].items():
                for b in blocks:
                    x = assemble(0, b, key)
                    if is_feasible(game, x):
                        out.add(x)
        game._feasible = tuple(sorted(out))
    return list(game._feasible)


def refined_domain(game: FiniteGnep, i: int) -> set:
    """Rival profiles of player ``i`` that extend to a feasible profile."""
    if not 0 <= i < game.n:
        raise IndexError(f"player {i} out of range")
    return {x.rivals(i) for x in enumerate_feasible_profiles(game)}


def player_cost(game, i: int, x):
    x = _profile(game, x)
    return game.cost(i, x)
