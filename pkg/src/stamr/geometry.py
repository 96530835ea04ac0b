"""Finite voxel shapes: connectivity, boxes, neighborhoods, congruence, cavities."""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

from .rotation import FACES, N_ROTATIONS, rotate_vec

Voxel = tuple[int, int, int]
Shape = frozenset  # of Voxel

DIRS = tuple(f.vec for f in FACES)


class ShapeError(ValueError):
    pass


def neighbors(p: Voxel):
    x, y, z = p
    for dx, dy, dz in DIRS:
        yield (x + dx, y + dy, z + dz)


def _flood(start, allowed) -> set:
    seen = {start}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        for q in neighbors(p):
            if q not in seen and q in allowed:
                seen.add(q)
                queue.append(q)
    return seen


def is_connected(voxels: Iterable[Voxel]) -> bool:
    vs = set(voxels)
    if not vs:
        raise ShapeError("empty voxel set")
    return len(_flood(next(iter(vs)), vs)) == len(vs)


def make_shape(voxels: Iterable[Voxel]) -> Shape:
    s = frozenset(tuple(int(c) for c in v) for v in voxels)
    if not s:
        raise ShapeError("a shape must be non-empty")
    if not is_connected(s):
        raise ShapeError("a shape must be 6-connected")
    return s


@dataclass(frozen=True)
class BBox:
    lo: Voxel
    hi: Voxel

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    def __contains__(self, p) -> bool:
        return all(l <= c <= h for l, c, h in zip(self.lo, p, self.hi))

    def cells(self):
        (x0, y0, z0), (x1, y1, z1) = self.lo, self.hi
        return [
            (x, y, z)
            for x in range(x0, x1 + 1)
            for y in range(y0, y1 + 1)
            for z in range(z0, z1 + 1)
        ]

    def expanded(self, m: int = 1) -> "BBox":
        return BBox(tuple(c - m for c in self.lo), tuple(c + m for c in self.hi))


def min_bbox(s: Iterable[Voxel]) -> BBox:
    s = list(s)
    if not s:
        raise ShapeError("empty voxel set")
    return BBox(tuple(min(v[i] for v in s) for i in range(3)), tuple(max(v[i] for v in s) for i in range(3)))


def normalize(s: Iterable[Voxel]) -> Shape:
    s = list(s)
    lo = min_bbox(s).lo
    return frozenset((x - lo[0], y - lo[1], z - lo[2]) for x, y, z in s)


def rotate_shape(s: Iterable[Voxel], r: int) -> Shape:
    return frozenset(rotate_vec(r, v) for v in s)


def canonical_shape(s: Iterable[Voxel]) -> tuple:
    """Lexicographically least sorted voxel tuple over the 24 rotations, at the origin."""
    return min(tuple(sorted(normalize(rotate_shape(s, r)))) for r in range(N_ROTATIONS))


def congruent(a: Iterable[Voxel], b: Iterable[Voxel]) -> bool:
    """Equal up to one of the 24 proper rotations plus a translation."""
    a, nb = frozenset(a), normalize(b)
    if len(a) != len(nb):
        return False
    return any(normalize(rotate_shape(a, r)) == nb for r in range(N_ROTATIONS))


# -- neighborhoods -------------------------------------------------------------

NEIGHBORHOOD_CLASSES = (
    "1",
    "2-collinear",
    "2-bent",
    "3-collinear+1",
    "3-corner",
    "4-planar",
    "4-tripod+1",
    "5",
    "6",
)


def _class_of(dirs: frozenset) -> str:
    n = len(dirs)
    if n in (1, 5, 6):
        return str(n)
    axes_pairs = sum(1 for d in dirs if tuple(-c for c in d) in dirs)
    if n == 2:
        return "2-collinear" if axes_pairs else "2-bent"
    if n == 3:
        return "3-collinear+1" if axes_pairs else "3-corner"
    if n == 4:
        # four in a plane hold two opposite pairs; otherwise one pair plus two
        return "4-planar" if axes_pairs == 4 else "4-tripod+1"
    raise ShapeError("a voxel with no neighbors has no neighborhood class")


@lru_cache(maxsize=None)
def direction_orbits() -> dict[frozenset, frozenset]:
    """Map each non-empty direction subset to its orbit under the 24 rotations."""
    subsets = []
    for mask in range(1, 64):
        subsets.append(frozenset(DIRS[i] for i in range(6) if mask >> i & 1))
    out = {}
    for s in subsets:
        out[s] = frozenset(frozenset(rotate_vec(r, d) for d in s) for r in range(N_ROTATIONS))
    return out


def neighborhood_dirs(s: Shape, p: Voxel) -> frozenset:
    if p not in s:
        raise ShapeError(f"{p} is not in the shape")
    return frozenset(d for d in DIRS if (p[0] + d[0], p[1] + d[1], p[2] + d[2]) in s)


def neighborhood_class(s: Shape, p: Voxel) -> str:
    return _class_of(neighborhood_dirs(s, p))


# -- cavities ------------------------------------------------------------------------


def outside_cells(s: Shape) -> set:
    """Empty cells of the 1-expanded box reachable from its corner."""
    box = min_bbox(s).expanded(1)
    allowed = {c for c in box.cells() if c not in s}
    return _flood(box.lo, allowed)


def enclosed_cavities(s: Shape) -> list[frozenset]:
    """Empty components that cannot reach outside the box."""
    out = outside_cells(s)
    rest = {c for c in min_bbox(s).cells() if c not in s and c not in out}
    comps = []
    while rest:
        comp = _flood(next(iter(sorted(rest))), rest)
        rest -= comp
        comps.append(frozenset(comp))
    return sorted(comps, key=lambda c: sorted(c))


def line_visible(s: Shape, cell: Voxel, box: BBox | None = None) -> bool:
    """Some axis ray from ``cell`` to the box boundary passes only empty cells."""
    box = box or min_bbox(s)
    for d in DIRS:
        p = cell
        clear = True
        while p in box:
            if p in s:
                clear = False
                break
            p = (p[0] + d[0], p[1] + d[1], p[2] + d[2])
        if clear:
            return True
    return False


@dataclass(frozen=True)
class EmptyComponent:
    cells: frozenset
    visible: frozenset
    hidden: frozenset

    @property
    def bent(self) -> bool:
        return bool(self.visible) and bool(self.hidden)


def empty_components(s: Shape) -> list[EmptyComponent]:
    """Non-enclosed empty components inside the box, with visibility split."""
    box = min_bbox(s)
    enclosed = set().union(*enclosed_cavities(s)) if s else set()
    rest = {c for c in box.cells() if c not in s and c not in enclosed}
    comps = []
    while rest:
        comp = _flood(min(rest), rest)
        rest -= comp
        vis = frozenset(c for c in comp if line_visible(s, c, box))
        comps.append(EmptyComponent(frozenset(comp), vis, frozenset(comp) - vis))
    return sorted(comps, key=lambda c: sorted(c.cells))


def bent_cavities(s: Shape) -> list[EmptyComponent]:
    return [c for c in empty_components(s) if c.bent]


# -- generation and files ---------------------------------------------------------------


def random_connected_shape(seed: int, dims: tuple[int, int, int], size: int) -> Shape:
    """Seeded growth from a random start voxel by uniform boundary neighbors."""
    X, Y, Z = dims
    vol = X * Y * Z
    if not 1 <= size <= vol:
        raise ShapeError(f"size {size} impossible in a {X}x{Y}x{Z} box")
    rng = random.Random(seed)
    start = (rng.randrange(X), rng.randrange(Y), rng.randrange(Z))
    shape = {start}
    while len(shape) < size:
        boundary = sorted(
            {
                q for p in shape for q in neighbors(p)
                if q not in shape and 0 <= q[0] < X and 0 <= q[1] < Y and 0 <= q[2] < Z
            }
        )
        shape.add(rng.choice(boundary))
    return frozenset(shape)


def random_corpus(seed: int, count: int, max_dim: int = 5) -> list[Shape]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        dims = tuple(rng.randint(1, max_dim) for _ in range(3))
        size = rng.randint(1, dims[0] * dims[1] * dims[2])
        out.append(random_connected_shape(rng.getrandbits(32), dims, size))
    return out


def parse_shape(text: str) -> Shape:
    vox = set()
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if len(parts) != 3:
                raise ValueError
            v = tuple(int(p) for p in parts)
        except ValueError:
            raise ShapeError(f"line {i}: expected three integers") from None
        if v in vox:
            raise ShapeError(f"line {i}: duplicate voxel {v}")
        vox.add(v)
    return make_shape(vox)


def serialize_shape(s: Iterable[Voxel]) -> str:
    return "".join(f"{x} {y} {z}\n" for x, y, z in sorted(s))


def dump_voxels(s: Iterable[Voxel]) -> str:
    """ASCII slices, one block per z (``#`` filled, ``.`` empty, top row is max y)."""
    s = frozenset(s)
    box = min_bbox(s)
    (x0, y0, z0), (x1, y1, z1) = box.lo, box.hi
    out = []
    for z in range(z0, z1 + 1):
        out.append(f"z={z}")
        for y in range(y1, y0 - 1, -1):
            out.append("".join("#" if (x, y, z) in s else "." for x in range(x0, x1 + 1)))
    return "\n".join(out) + "\n"
