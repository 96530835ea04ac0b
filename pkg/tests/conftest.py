"""Shared fixtures: small tile systems and independent oracles."""
from __future__ import annotations

import itertools
import math

import pytest

from stamr.model import (
    Glue,
    GlueSpec,
    GlueState,
    Signal,
    Supertile,
    Tile,
    TileType,
)
from stamr.rotation import Face

ON, LATENT, OFF = GlueState.ON, GlueState.LATENT, GlueState.OFF


def tt(name, glues=(), signals=()):
    """Tile type from (face, label, strength[, state]) tuples and (src, dst, action) signals."""
    specs = []
    for g in glues:
        face, label, strength, *rest = g
        specs.append(GlueSpec(Face.parse(face), Glue(label, strength), rest[0] if rest else ON))
    sigs = [
        Signal((Face.parse(sf), sl), (Face.parse(df), dl), act)
        for (sf, sl), (df, dl), act in signals
    ]
    return TileType(name, tuple(specs), tuple(sigs))


def ab_pair():
    a = tt("A", [("+x", "a", 2)])
    b = tt("B", [("-x", "a*", 2)])
    return a, b


def three_type_toy():
    """A-B bond turns B's C-facing glue off; the A-B-C triple sheds C."""
    a = tt("A", [("+x", "a", 2)])
    b = tt("B", [("-x", "a*", 2), ("+x", "c", 2)], [(("-x", "a*"), ("+x", "c"), OFF)])
    c = tt("C", [("-x", "c*", 2)])
    return a, b, c


# -- independent oracles -------------------------------------------------------------


def oracle_rotations():
    """The 24 proper rotation matrices, from the 48 signed permutations."""
    out = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = [[0] * 3 for _ in range(3)]
            for i in range(3):
                m[i][perm[i]] = signs[i]
            det = (
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            )
            if det == 1:
                out.append(tuple(tuple(r) for r in m))
    return out


def oracle_apply(m, v):
    return tuple(sum(m[i][j] * v[j] for j in range(3)) for i in range(3))


def oracle_normalize(vox):
    lo = [min(v[i] for v in vox) for i in range(3)]
    return frozenset(tuple(v[i] - lo[i] for i in range(3)) for v in vox)


def oracle_congruent(a, b):
    nb = oracle_normalize(b)
    return any(oracle_normalize({oracle_apply(m, v) for v in a}) == nb for m in oracle_rotations())


def oracle_min_cut(points, weights):
    """Minimum over every bipartition of ``points`` (weights keyed by point pairs)."""
    pts = sorted(points)
    if len(pts) < 2:
        return math.inf
    first, rest = pts[0], pts[1:]
    best = math.inf
    for k in range(len(rest)):
        for combo in itertools.combinations(rest, k):
            side = {first, *combo}
            best = min(best, sum(w for (p, q), w in weights.items() if (p in side) != (q in side)))
    return best


def line(points, names=None):
    """Supertile of unglued tiles at ``points`` (for geometric tests)."""
    blank = TileType("blank")
    return Supertile({p: Tile(blank) for p in points})


@pytest.fixture
def toy_ab():
    return ab_pair()


@pytest.fixture
def toy3():
    return three_type_toy()


def random_bonded_supertile(rng, max_tiles=8, p_bond=0.7, max_pairs=2):
    """Random connected point set with random bonds; returns (supertile, oracle weights)."""
    from stamr.geometry import random_connected_shape

    n = rng.randint(1, max_tiles)
    dims = (rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 3))
    while dims[0] * dims[1] * dims[2] < n:
        dims = (dims[0] + 1, dims[1], dims[2])
    pts = sorted(random_connected_shape(rng.getrandbits(32), dims, n))
    glues = {p: [] for p in pts}
    pending = []
    weights = {}
    k = 0
    for p in pts:
        for f in ("+x", "+y", "+z"):
            v = Face.parse(f).vec
            q = (p[0] + v[0], p[1] + v[1], p[2] + v[2])
            if q not in glues or rng.random() > p_bond:
                continue
            for _ in range(rng.randint(1, max_pairs)):
                s = rng.randint(1, 3)
                lab = f"e{k}"
                k += 1
                glues[p].append((f, lab, s))
                glues[q].append((Face.parse(f).opposite.value, lab + "*", s))
                pending.append((p, q, lab))
                weights[(p, q)] = weights.get((p, q), 0) + s
    types = {p: tt(f"t{i}", glues[p]) for i, p in enumerate(pts)}
    tiles = {p: Tile(types[p]) for p in pts}
    bonds = []
    for p, q, lab in pending:
        ti, tj = types[p], types[q]
        gi = next(i for i, g in enumerate(ti.glues) if g.label == lab)
        gj = next(i for i, g in enumerate(tj.glues) if g.label == lab + "*")
        bonds.append(((p, gi), (q, gj)))
    return Supertile(tiles, bonds), weights
