"""Benchmark sweeps over generated flow games.

A sweep is described by a JSON config::

    {"types": [[2, 10, "s", 1], [2, 10, "m", 10]],
     "instances_per_type": 10, "seed": 0,
     "methods": ["valpha", {"method": "vbar", "penalized": true}, "reformulation-exhaustive"],
     "starts": 100, "time_limit": 60, "alpha": 0.02, "beta": 0.05}

Each type tuple is ``(players, nodes, a, b)`` with ``a`` in ``{"s", "m"}``
(single or multiple source-sink pairs) and ``b`` in ``{1, 10}`` (unit or
random demands). The CSV holds one ``run`` row per (instance, method)
followed by one ``aggregate`` row per (type, method). Aggregate times and
start counts average successful runs only.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .flowgame import generate_instance
from .nikaido import ALPHA, BETA, is_gne
from .solvers import ENUM_CAP, GNE_FOUND, EnumerationCapExceeded, SolveConfig, solve

CSV_COLUMNS = ("row", "instance", "type", "seed", "method", "penalized", "status", "found", "time",
               "starts", "value", "profile", "error", "runs", "successes", "gne_rate")


@dataclass(frozen=True)
class MethodSpec:
    method: str
    penalized: bool = False

    @property
    def label(self) -> str:
        return self.method + ("+pen" if self.penalized else "")


@dataclass
class BenchConfig:
    types: list
    instances_per_type: int = 10
    seed: int = 0
    methods: list = field(default_factory=lambda: [MethodSpec("valpha")])
    starts: int = 100
    time_limit: float = 60.0
    alpha: float = ALPHA
    beta: float = BETA
    enum_cap: int = ENUM_CAP
    max_evals: int = 15000
    workers: int = 1

    def __post_init__(self):
        self.types = [parse_type(t) for t in self.types]
        self.methods = [m if isinstance(m, MethodSpec) else
                        MethodSpec(m) if isinstance(m, str) else MethodSpec(**m) for m in self.methods]
        if self.instances_per_type < 1:
            raise ValueError("instances_per_type must be positive")
        for m in self.methods:
            self.solve_config(m)

    def solve_config(self, m: MethodSpec, seed: int = 0) -> SolveConfig:
        return SolveConfig(method=m.method, penalized=m.penalized, alpha=self.alpha, beta=self.beta,
                           starts=self.starts, seed=seed, time_limit=self.time_limit,
                           max_evals=self.max_evals, enum_cap=self.enum_cap)

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchConfig":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "types" not in doc:
            raise ValueError("config needs a 'types' list")
        return cls(**doc)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BenchConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def parse_type(t) -> tuple:
    """Normalize ``(players, nodes, a, b)``; accepts a list or ``"2,10,s,1"``."""
    if isinstance(t, str):
        t = t.split(",")
    if len(t) != 4:
        raise ValueError(f"instance type needs four entries, got {t!r}")
    n, v, a, b = int(t[0]), int(t[1]), str(t[2]).strip(), int(t[3])
    if a not in ("s", "m"):
        raise ValueError(f"source mode must be 's' or 'm', got {a!r}")
    if b not in (1, 10):
        raise ValueError(f"demand mode must be 1 or 10, got {b!r}")
    return n, v, a, b


def type_label(t) -> str:
    return "({},{},{},{})".format(*t)


def generator_args(t) -> dict:
    n, v, a, b = t
    return {"n_nodes": v, "n_players": n, "source_mode": "single" if a == "s" else "multi",
            "weight_mode": "unit" if b == 1 else "random"}


def instance_seed(base: int, t, k: int) -> int:
    """Seed of the ``k``-th instance of type ``t``; independent of the sweep layout."""
    n, v, a, b = t
    ss = np.random.SeedSequence([int(base), n, v, 0 if a == "s" else 1, b, k])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class BenchmarkRecord:
    instance: str
    type: tuple
    seed: int
    method: str
    penalized: bool
    status: str
    found: bool
    time: float
    starts: int
    value: Optional[str]
    profile: Optional[list]
    error: str = ""

    def csv_row(self) -> dict:
        return {"row": "run", "instance": self.instance, "type": type_label(self.type), "seed": self.seed,
                "method": self.method, "penalized": int(self.penalized), "status": self.status,
                "found": int(self.found), "time": f"{self.time:.4f}", "starts": self.starts,
                "value": "" if self.value is None else self.value,
                "profile": "" if self.profile is None else json.dumps(self.profile),
                "error": self.error}


def _profile_json(x):
    return [[c if isinstance(c, int) else str(c) for c in b] for b in x.blocks]


def run_one(cfg: BenchConfig, t, k: int, m: MethodSpec) -> BenchmarkRecord:
    """Generate, solve and re-verify; errors become part of the record."""
    seed = instance_seed(cfg.seed, t, k)
    name = f"{type_label(t)}#{k}"
    t0 = time.monotonic()
    try:
        inst = generate_instance(seed=seed, **generator_args(t))
        t0 = time.monotonic()
        res = solve(inst, cfg.solve_config(m, seed=seed))
    except EnumerationCapExceeded as exc:
        return BenchmarkRecord(name, t, seed, m.method, m.penalized, "cap_exceeded", False,
                               time.monotonic() - t0, 0, None, None, str(exc))
    except Exception as exc:  # a single run must never abort the sweep
        return BenchmarkRecord(name, t, seed, m.method, m.penalized, "error", False,
                               time.monotonic() - t0, 0, None, None, f"{type(exc).__name__}: {exc}")
    elapsed = time.monotonic() - t0
    found = res.status == GNE_FOUND
    error = ""
    if found and not is_gne(inst, res.profile):
        found, error = False, "reported profile failed re-verification"
    profile = _profile_json(res.profile) if res.profile is not None else None
    value = None if res.value is None else str(res.value)
    return BenchmarkRecord(name, t, seed, m.method, m.penalized, res.status, found, elapsed,
                           res.starts_used, value, profile, error)


def _run_task(args):
    return run_one(*args)


def aggregate(records: Sequence[BenchmarkRecord]) -> list:
    """Per (type, method): run count, GNE rate, and means over successes only."""
    groups = {}
    for r in records:
        groups.setdefault((r.type, r.method, r.penalized), []).append(r)
    rows = []
    for (t, method, pen), rs in groups.items():
        ok = [r for r in rs if r.found]
        rows.append({
            "row": "aggregate", "type": type_label(t), "method": method, "penalized": int(pen),
            "runs": len(rs), "successes": len(ok), "gne_rate": f"{len(ok) / len(rs):.4f}",
            "time": f"{sum(r.time for r in ok) / len(ok):.4f}" if ok else "",
            "starts": f"{sum(r.starts for r in ok) / len(ok):.2f}" if ok else "",
        })
    return rows


def run_benchmark(cfg: BenchConfig, out: Optional[Union[str, Path]] = None) -> tuple:
    """Run the sweep; returns ``(records, aggregate_rows)`` and writes the CSV if asked.

    Records come back in (type, instance, method) order whatever the worker
    count, so reruns with the same seeds give the same table.
    """
    tasks = [(cfg, t, k, m) for t in cfg.types for k in range(cfg.instances_per_type) for m in cfg.methods]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(a) for a in tasks]
    agg = aggregate(records)
    if out is not None:
        write_csv(records, agg, out)
    return records, agg


def write_csv(records, agg, out) -> None:
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in records:
            w.writerow(r.csv_row())
        for row in agg:
            w.writerow(row)


def records_as_dicts(records) -> list:
    return [asdict(r) for r in records]
