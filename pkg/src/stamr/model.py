"""Tiles, glues, signals and supertiles, plus the pure operations on them.

A supertile is stored as a mapping from lattice point to a placed :class:`Tile`
(tile type, rotation id, glue states, pending and completed signals) together
with the set of bonds that have formed.  A bond end is ``(point, glue index)``
where the glue index refers to the tile type's glue list.

Canonical forms are computed from a world-frame serialization, so two placed
tiles whose rotations differ only by a symmetry of their tile type compare
equal.
"""
from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

import networkx as nx

from .rotation import (
    FACES,
    IDENTITY,
    N_ROTATIONS,
    Face,
    compose,
    rotate,
    rotate_vec,
)

Point = tuple[int, int, int]
BondEnd = tuple[Point, int]
Bond = tuple[BondEnd, BondEnd]

LABEL_RE = re.compile(r"^[A-Za-z0-9_]+\*?$")

STAM_R = "stam_r"
STAM = "stam"
MODES = (STAM_R, STAM)


class TilesetError(ValueError):
    """Raised when a tileset or tile type is malformed."""


class GlueState(str, Enum):
    ON = "on"
    LATENT = "latent"
    OFF = "off"


LEGAL_TRANSITIONS = frozenset(
    {
        (GlueState.ON, GlueState.OFF),
        (GlueState.LATENT, GlueState.ON),
        (GlueState.LATENT, GlueState.OFF),
    }
)


def transition(current: GlueState, desired: GlueState) -> GlueState:
    """State after a pending signal asking for ``desired`` is processed."""
    if (current, desired) in LEGAL_TRANSITIONS:
        return desired
    return current


def complement_label(label: str) -> str:
    if not label or label == "*":
        raise ValueError("glue label must be non-empty")
    return label[:-1] if label.endswith("*") else label + "*"


def label_family(label: str) -> str:
    return label.rstrip("*")


@dataclass(frozen=True)
class Glue:
    label: str
    strength: int

    def __post_init__(self):
        if not LABEL_RE.match(self.label):
            raise TilesetError(f"bad glue label {self.label!r}")
        if self.strength < 1:
            raise TilesetError(f"glue {self.label}: strength must be positive")

    def binds(self, other: "Glue") -> bool:
        return other.label == complement_label(self.label)


@dataclass(frozen=True)
class GlueSpec:
    """A glue on one face of a tile type, with its initial state."""

    face: Face
    glue: Glue
    state: GlueState = GlueState.ON

    @property
    def label(self) -> str:
        return self.glue.label

    @property
    def strength(self) -> int:
        return self.glue.strength


@dataclass(frozen=True)
class Signal:
    source: tuple[Face, str]
    target: tuple[Face, str]
    action: GlueState

    def __post_init__(self):
        if self.action not in (GlueState.ON, GlueState.OFF):
            raise TilesetError("signal action must be on or off")


@dataclass(frozen=True)
class TileType:
    name: str
    glues: tuple[GlueSpec, ...] = ()
    signals: tuple[Signal, ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)
    _by_source: tuple = field(default=None, init=False, repr=False, compare=False, hash=False)
    _sig_target: tuple = field(default=None, init=False, repr=False, compare=False, hash=False)
    _h: int = field(default=0, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "glues", tuple(self.glues))
        object.__setattr__(self, "signals", tuple(self.signals))
        index = {}
        for i, g in enumerate(self.glues):
            key = (g.face, g.label)
            if key in index:
                raise TilesetError(f"tile {self.name}: duplicate glue {g.label} on {g.face.value}")
            index[key] = i
        by_source = [[] for _ in self.glues]
        targets = []
        for si, s in enumerate(self.signals):
            if s.source not in index:
                raise TilesetError(
                    f"tile {self.name}: signal source {s.source[1]} not on face {s.source[0].value}"
                )
            if s.target not in index:
                raise TilesetError(
                    f"tile {self.name}: signal target {s.target[1]} not on face {s.target[0].value}"
                )
            by_source[index[s.source]].append(si)
            targets.append(index[s.target])
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_by_source", tuple(tuple(x) for x in by_source))
        object.__setattr__(self, "_sig_target", tuple(targets))
        object.__setattr__(self, "_h", hash((self.name, self.glues, self.signals)))

    def __hash__(self):
        return self._h

    def glue_index(self, face: Face, label: str) -> int:
        return self._index[(face, label)]

    def signals_from(self, glue_index: int) -> tuple[int, ...]:
        return self._by_source[glue_index]

    def signal_target(self, signal_index: int) -> int:
        return self._sig_target[signal_index]

    def initial_states(self) -> tuple[GlueState, ...]:
        return tuple(g.state for g in self.glues)


def check_strength_consistency(types: Iterable[TileType]) -> dict[str, int]:
    """Every label family (l and l*) must use a single strength."""
    seen: dict[str, tuple[int, str]] = {}
    for t in types:
        for g in t.glues:
            fam = label_family(g.label)
            if fam in seen and seen[fam][0] != g.strength:
                raise TilesetError(
                    f"glue family {fam}: strength {g.strength} on tile {t.name} "
                    f"conflicts with strength {seen[fam][0]} on tile {seen[fam][1]}"
                )
            seen.setdefault(fam, (g.strength, t.name))
    return {k: v[0] for k, v in seen.items()}


@dataclass(frozen=True)
class Tile:
    """A placed tile instance: type, rotation id and tile state."""

    type: TileType
    rot: int = IDENTITY
    states: tuple[GlueState, ...] = None
    pending: frozenset = frozenset()
    completed: frozenset = frozenset()
    _h: int = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.states is None:
            object.__setattr__(self, "states", self.type.initial_states())

    def __hash__(self):
        if self._h is None:
            object.__setattr__(self, "_h", hash((self.type, self.rot, self.states, self.pending, self.completed)))
        return self._h

    @property
    def name(self) -> str:
        return self.type.name

    def world_face(self, gi: int) -> Face:
        return _world_faces(self.type, self.rot)[gi]

    def glues_on_face(self, face: Face) -> list[int]:
        return _glues_by_world_face(self.type, self.rot).get(face, [])

    def state_of(self, face: Face, label: str) -> GlueState:
        """Glue state by canonical (type-frame) face and label."""
        return self.states[self.type.glue_index(face, label)]

    def with_rot(self, rot: int) -> "Tile":
        return replace(self, rot=rot)

    def enqueue(self, gi: int) -> "Tile":
        """Add the signals sourced at glue ``gi`` that are neither pending nor completed."""
        new = [s for s in self.type.signals_from(gi) if s not in self.pending and s not in self.completed]
        if not new:
            return self
        return replace(self, pending=self.pending | frozenset(new))

    def process(self, si: int) -> tuple["Tile", bool]:
        if si not in self.pending:
            raise ValueError(f"signal {si} is not pending on tile {self.name}")
        gi = self.type.signal_target(si)
        desired = self.type.signals[si].action
        cur = self.states[gi]
        nxt = transition(cur, desired)
        states = self.states
        if nxt != cur:
            states = states[:gi] + (nxt,) + states[gi + 1:]
        return (
            replace(self, states=states, pending=self.pending - {si}, completed=self.completed | {si}),
            nxt != cur,
        )


@lru_cache(maxsize=None)
def _world_faces(ttype: TileType, rot: int) -> tuple[Face, ...]:
    return tuple(rotate(rot, g.face) for g in ttype.glues)


@lru_cache(maxsize=None)
def _glues_by_world_face(ttype: TileType, rot: int) -> dict:
    out: dict = {}
    for gi, f in enumerate(_world_faces(ttype, rot)):
        out.setdefault(f, []).append(gi)
    return out


@lru_cache(maxsize=None)
def _world_desc(ttype: TileType, rot: int):
    """World-frame descriptors of glues and signals, used by canonical forms."""
    wf = _world_faces(ttype, rot)
    glues = tuple((wf[i].order, g.label) for i, g in enumerate(ttype.glues))
    sigs = tuple(
        (
            wf[ttype.glue_index(*s.source)].order,
            s.source[1],
            wf[ttype.signal_target(si)].order,
            s.target[1],
            s.action.value,
        )
        for si, s in enumerate(ttype.signals)
    )
    return glues, sigs


def add(p: Point, q) -> Point:
    return (p[0] + q[0], p[1] + q[1], p[2] + q[2])


def sub(p: Point, q) -> Point:
    return (p[0] - q[0], p[1] - q[1], p[2] - q[2])


def make_bond(a: BondEnd, b: BondEnd) -> Bond:
    return (a, b) if a <= b else (b, a)


_FINGERPRINTS: dict = {}


class Supertile:
    """Placed tiles plus formed bonds.  Treated as immutable."""

    __slots__ = ("tiles", "bonds", "_hash", "_canon", "_fid")

    def __init__(self, tiles: Mapping[Point, Tile], bonds: Iterable[Bond] = ()):
        self.tiles: dict[Point, Tile] = dict(sorted(dict(tiles).items(), key=lambda kv: kv[0]))
        self.bonds: frozenset[Bond] = frozenset(make_bond(*b) for b in bonds)
        self._hash = None
        self._canon = {}
        self._fid = None

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self) -> Iterator[Point]:
        return iter(self.tiles)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Supertile):
            return NotImplemented
        return self.tiles == other.tiles and self.bonds == other.bonds

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((frozenset(self.tiles.items()), self.bonds))
        return self._hash

    def __repr__(self) -> str:
        names = ",".join(sorted(t.name for t in self.tiles.values()))
        return f"Supertile(n={len(self)}, tiles=[{names}], bonds={len(self.bonds)})"

    def fingerprint(self) -> int:
        """Small integer naming this exact placement (points, rotations, glue indices)."""
        if self._fid is None:
            key = (
                tuple(
                    (p, t.type, t.rot, t.states, tuple(sorted(t.pending)), tuple(sorted(t.completed)))
                    for p, t in self.tiles.items()
                ),
                tuple(sorted(self.bonds)),
            )
            self._fid = _FINGERPRINTS.setdefault(key, len(_FINGERPRINTS))
        return self._fid

    @classmethod
    def singleton(cls, ttype: TileType, rot: int = IDENTITY) -> "Supertile":
        return cls({(0, 0, 0): Tile(ttype, rot)})

    @property
    def points(self) -> frozenset:
        return frozenset(self.tiles)

    def bonded_glues(self) -> set[BondEnd]:
        return {end for b in self.bonds for end in b}

    def bond_strength(self, bond: Bond) -> int:
        (p, gi), _ = bond
        return self.tiles[p].type.glues[gi].strength

    def edge_weights(self) -> dict[tuple[Point, Point], int]:
        """Total bond strength between each bonded pair of positions."""
        w: dict = {}
        for b in self.bonds:
            (p, _), (q, _) = b
            key = (p, q) if p <= q else (q, p)
            w[key] = w.get(key, 0) + self.bond_strength(b)
        return w

    def tile_names(self) -> list[str]:
        return sorted(t.name for t in self.tiles.values())


def bond_candidates_within(st: Supertile) -> list[Bond]:
    """Abutting complementary on/on glue pairs inside ``st`` that have not bonded."""
    bonded = st.bonded_glues()
    out = []
    for p, tile in st.tiles.items():
        for face in (Face.PX, Face.PY, Face.PZ):
            q = add(p, face.vec)
            other = st.tiles.get(q)
            if other is None:
                continue
            out.extend(_pairs_between(p, tile, face, q, other, bonded))
    return sorted(out)


def _pairs_between(p, tile: Tile, face: Face, q, other: Tile, bonded=()) -> list[Bond]:
    out = []
    opp = face.opposite
    for gi in tile.glues_on_face(face):
        if tile.states[gi] is not GlueState.ON or (p, gi) in bonded:
            continue
        g = tile.type.glues[gi].glue
        for gj in other.glues_on_face(opp):
            if other.states[gj] is not GlueState.ON or (q, gj) in bonded:
                continue
            if g.binds(other.type.glues[gj].glue):
                out.append(make_bond((p, gi), (q, gj)))
    return out


def place(st: Supertile, r: int, t=(0, 0, 0)) -> Supertile:
    """Rigidly move ``st``: rotate by ``r`` about the origin, then translate by ``t``."""
    if r == IDENTITY and t == (0, 0, 0):
        return st
    pmap = {p: add(rotate_vec(r, p), t) for p in st.tiles}
    tiles = {pmap[p]: tile.with_rot(compose(r, tile.rot)) for p, tile in st.tiles.items()}
    bonds = [((pmap[a], ga), (pmap[b], gb)) for (a, ga), (b, gb) in st.bonds]
    return Supertile(tiles, bonds)


def formable_bonds(a: Supertile, b: Supertile, r: int = IDENTITY, t=(0, 0, 0)):
    """Bond candidates between ``a`` and ``b`` moved by ``(r, t)``.

    Returns ``(candidates, total_strength)``, or ``None`` when the placement
    overlaps.  Candidates are bonds expressed in ``a``'s frame.
    """
    pts = [(p, add(rotate_vec(r, p), t)) for p in b.tiles]
    at = a.tiles
    if any(q in at for _, q in pts):
        return None
    cands = []
    total = 0
    for p, q0 in pts:
        tile = None
        for face in FACES:
            q = add(q0, face.vec)
            other = at.get(q)
            if other is None:
                continue
            if tile is None:
                tile = b.tiles[p].with_rot(compose(r, b.tiles[p].rot))
            for bond in _pairs_between(q0, tile, face, q, other):
                cands.append(bond)
                total += tile.type.glues[bond[0][1] if bond[0][0] == q0 else bond[1][1]].strength
    cands.sort()
    return cands, total


def merge(a: Supertile, bp: Supertile, new_bonds: Iterable[Bond]) -> Supertile:
    """Union of two non-overlapping placed supertiles, forming ``new_bonds``.

    Every glue that forms a bond enqueues its signals.
    """
    tiles = dict(a.tiles)
    tiles.update(bp.tiles)
    new_bonds = list(new_bonds)
    for b in new_bonds:
        for p, gi in b:
            tiles[p] = tiles[p].enqueue(gi)
    return Supertile(tiles, list(a.bonds) + list(bp.bonds) + new_bonds)


def form_bond(st: Supertile, bond: Bond) -> Supertile:
    tiles = dict(st.tiles)
    for p, gi in bond:
        tiles[p] = tiles[p].enqueue(gi)
    return Supertile(tiles, list(st.bonds) + [bond])


def process_signal(st: Supertile, p: Point, si: int) -> tuple[Supertile, bool]:
    """Complete pending signal ``si`` on the tile at ``p``.

    A glue that leaves the on state drops every bond it was part of.  Returns
    the new supertile (possibly no longer stable) and whether the target glue
    changed state.
    """
    tile, changed = st.tiles[p].process(si)
    tiles = dict(st.tiles)
    tiles[p] = tile
    bonds = st.bonds
    if changed:
        gi = tile.type.signal_target(si)
        if tile.states[gi] is not GlueState.ON:
            bonds = [b for b in bonds if (p, gi) not in b]
    return Supertile(tiles, bonds), changed


def pending_signals(st: Supertile) -> list[tuple[Point, int]]:
    return sorted((p, si) for p, tile in st.tiles.items() for si in tile.pending)


# -- stability ---------------------------------------------------------------


def _components(nodes, adj) -> list[set]:
    seen = set()
    comps = []
    for n in sorted(nodes):
        if n in seen:
            continue
        comp = {n}
        stack = [n]
        seen.add(n)
        while stack:
            u = stack.pop()
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
        comps.append(comp)
    return comps


def bond_components(st: Supertile) -> list[set]:
    adj: dict = {}
    for p, q in st.edge_weights():
        adj.setdefault(p, set()).add(q)
        adj.setdefault(q, set()).add(p)
    return _components(st.tiles, adj)


def stoer_wagner(nodes, weights: Mapping[tuple, int]) -> tuple[float, set]:
    """Global minimum cut of an undirected weighted graph: ``(weight, one side)``.

    A single node has no cut: ``(inf, set())``.  A disconnected graph cuts at 0.
    """
    g = nx.Graph()
    g.add_nodes_from(sorted(nodes))
    if g.number_of_nodes() < 2:
        return math.inf, set()
    for (u, v), x in sorted(weights.items()):
        if u != v:
            prev = g.get_edge_data(u, v, {"weight": 0})["weight"]
            g.add_edge(u, v, weight=prev + x)
    if not nx.is_connected(g):
        return 0, set(min(nx.connected_components(g), key=min))
    w, (side, _) = nx.stoer_wagner(g)
    return w, set(side)


def min_cut(st: Supertile) -> tuple[float, set]:
    """Minimum cut of the binding graph: ``(weight, side)``.

    Disconnected binding graphs report weight 0 with one bond component as
    the side; singletons report ``inf``.
    """
    if len(st) < 2:
        return math.inf, set()
    comps = bond_components(st)
    if len(comps) > 1:
        return 0, comps[0]
    return stoer_wagner(st.tiles, st.edge_weights())


def min_cut_weight(st: Supertile) -> float:
    return min_cut(st)[0]


def is_tau_stable(st: Supertile, tau: int) -> bool:
    return min_cut_weight(st) >= tau


def split(st: Supertile, side: set) -> tuple[Supertile, Supertile]:
    """Cut ``st`` into ``side`` and the rest; bonds crossing the cut are dropped."""
    side = set(side)
    a = {p: t for p, t in st.tiles.items() if p in side}
    b = {p: t for p, t in st.tiles.items() if p not in side}
    if not a or not b:
        raise ValueError("a cut needs two non-empty sides")
    ba, bb = [], []
    for bond in st.bonds:
        (p, _), (q, _) = bond
        if p in side and q in side:
            ba.append(bond)
        elif p not in side and q not in side:
            bb.append(bond)
    return Supertile(a, ba), Supertile(b, bb)


def cut_weight(st: Supertile, side: set) -> int:
    return sum(x for (p, q), x in st.edge_weights().items() if (p in side) != (q in side))


# -- canonical forms ------------------------------------------------------------


def _serialize(st: Supertile, r: int):
    pts = {p: rotate_vec(r, p) for p in st.tiles}
    mins = tuple(min(v[i] for v in pts.values()) for i in range(3))
    tiles = []
    for p, tile in st.tiles.items():
        rot = compose(r, tile.rot)
        gdesc, sdesc = _world_desc(tile.type, rot)
        tiles.append(
            (
                sub(pts[p], mins),
                tile.type.name,
                tuple(sorted(zip(gdesc, (s.value for s in tile.states)))),
                tuple(sorted(sdesc[i] for i in tile.pending)),
                tuple(sorted(sdesc[i] for i in tile.completed)),
            )
        )
    tiles.sort()
    bonds = []
    for bond in st.bonds:
        ends = []
        for p, gi in bond:
            tile = st.tiles[p]
            gdesc, _ = _world_desc(tile.type, compose(r, tile.rot))
            ends.append((sub(pts[p], mins), gdesc[gi]))
        ends.sort()
        bonds.append(tuple(ends))
    bonds.sort()
    return (tuple(tiles), tuple(bonds)), mins


def _coarse_minimizers(st: Supertile, rots) -> list[int]:
    """Rotations minimizing the placed (point, tile name) list; the full key decides among them."""
    names = [(p, t.type.name) for p, t in st.tiles.items()]
    best, keep = None, []
    for r in rots:
        pts = [(rotate_vec(r, p), n) for p, n in names]
        mx = min(v[0] for v, _ in pts)
        my = min(v[1] for v, _ in pts)
        mz = min(v[2] for v, _ in pts)
        coarse = sorted(((x - mx, y - my, z - mz), n) for (x, y, z), n in pts)
        if best is None or coarse < best:
            best, keep = coarse, [r]
        elif coarse == best:
            keep.append(r)
    return keep


def canonical(st: Supertile, mode: str = STAM_R) -> tuple[tuple, Supertile]:
    """Canonical key and the canonically placed copy of ``st``.

    ``stam_r`` minimizes over the 24 rotations and all translations, ``stam``
    over translations only.
    """
    cached = st._canon.get(mode)
    if cached is not None:
        return cached
    rots = range(N_ROTATIONS) if mode == STAM_R else (IDENTITY,)
    if len(rots) > 1:
        rots = _coarse_minimizers(st, rots)
    best = None
    for r in rots:
        key, mins = _serialize(st, r)
        if best is None or key < best[0]:
            best = (key, r, mins)
    key, r, mins = best
    placed = place(st, r, tuple(-m for m in mins))
    placed._canon[mode] = (key, placed)
    st._canon[mode] = (key, placed)
    return key, placed


def canonical_form(st: Supertile, mode: str = STAM_R) -> tuple:
    return canonical(st, mode)[0]


def short_hash(key) -> str:
    return hashlib.sha1(repr(key).encode()).hexdigest()[:12]


def auto_bond(st: Supertile) -> Supertile:
    """Initial-state closure for a loaded assembly.

    Every abutting complementary on/on pair is bonded, and the signals those
    bonds fire are processed to completion (repeating while new bonds appear).
    """
    while True:
        cands = bond_candidates_within(st)
        if not cands:
            pend = pending_signals(st)
            if not pend:
                return st
            for p, si in pend:
                st, _ = process_signal(st, p, si)
            continue
        for bond in cands:
            st = form_bond(st, bond)
