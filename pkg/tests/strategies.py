"""Hypothesis strategies for tiny flow games, small enough for brute force."""
import itertools
from fractions import Fraction

import numpy as np
from hypothesis import strategies as st

from gnepconv.flowgame import (BILINEAR, CONGESTION, CdfgInstance, iter_integral_flows, iter_joint_profiles,
                               relaxed_joint_set_oracle)


@st.composite
def tiny_instances(draw, max_nodes=4, max_players=2, max_cap=2, max_demand=2, kind=None, nonempty=True):
    nv = draw(st.integers(2, max_nodes))
    nodes = list(range(nv))
    pairs = [(a, b) for a in nodes for b in nodes if a != b]
    arcs = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=5))
    m = len(arcs)
    caps = draw(st.lists(st.integers(0, max_cap), min_size=m, max_size=m))
    n = draw(st.integers(1, max_players))
    players = []
    for _ in range(n):
        s, t = draw(st.sampled_from(pairs))
        players.append((s, t, draw(st.integers(0, max_demand))))
    kind = kind or draw(st.sampled_from((BILINEAR, CONGESTION)))
    small = st.integers(0, 5)
    if kind == BILINEAR:
        c1 = [[[draw(small) for _ in range(m)] for _ in range(m)] for _ in range(n)]
        c2 = [[draw(small) for _ in range(m)] for _ in range(n)]
        inst = CdfgInstance(nodes, arcs, caps, players, BILINEAR, c1=c1, c2=c2)
    else:
        w = [[draw(small) for _ in range(m)] for _ in range(n)]
        inst = CdfgInstance(nodes, arcs, caps, players, CONGESTION, congestion=w)
    if nonempty:
        from hypothesis import assume

        assume(next(iter_joint_profiles(inst), None) is not None)
    return inst


@st.composite
def instance_and_rivals(draw, **kw):
    """An instance, a player and a rival profile that leaves that player a flow."""
    inst = draw(tiny_instances(**kw))
    profiles = list(iter_joint_profiles(inst))
    x = draw(st.sampled_from(profiles))
    i = draw(st.integers(0, inst.n - 1))
    return inst, i, x.rivals(i)


@st.composite
def instance_and_rival_flows(draw, **kw):
    """Rivals drawn from their own flow sets; the player may end up with nothing."""
    inst = draw(tiny_instances(**kw))
    i = draw(st.integers(0, inst.n - 1))
    caps = list(inst.capacities)
    rivals = []
    for j in range(inst.n):
        if j == i:
            continue
        flows = list(iter_integral_flows(inst, j, caps))
        if not flows:
            from hypothesis import assume

            assume(False)
        f = draw(st.sampled_from(flows))
        caps = [c - v for c, v in zip(caps, f)]
        rivals.append(f)
    return inst, i, tuple(rivals)


def exact_relaxed_points(inst, count, seed):
    """Rational points of X^: random convex combinations of integral profiles and LP vertices."""
    rng = np.random.default_rng(seed)
    oracle = relaxed_joint_set_oracle(inst)
    pool = [x.flat() for x in itertools.islice(iter_joint_profiles(inst), 200)]
    for _ in range(5):
        d = [int(v) for v in rng.integers(-5, 6, size=inst.n * inst.m)]
        pool.append(oracle.minimize(d).x)
    out = []
    for _ in range(count):
        picks = rng.choice(len(pool), size=min(3, len(pool)), replace=False)
        w = [Fraction(int(v)) for v in rng.integers(1, 10, size=len(picks))]
        tot = sum(w)
        flat = [sum(wk / tot * pool[k][a] for wk, k in zip(w, picks)) for a in range(inst.n * inst.m)]
        out.append([tuple(flat[i * inst.m:(i + 1) * inst.m]) for i in range(inst.n)])
    return out
