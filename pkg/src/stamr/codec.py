"""Zig-zag shape encoding, decoding and the slice-by-slice decode schedule.

Bit conventions: occupancy 1 = shape voxel, 0 = empty (filler).  Direction
row: 0 = growth toward +x, 1 = toward -x; row ``y`` of every slice runs in
direction ``y mod 2``.  Serial index ``i(x, y) = y*X + (x if y even else X-1-x)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .geometry import Shape, is_connected, normalize, rotate_shape, min_bbox
from .rotation import N_ROTATIONS


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Encoding:
    dims: tuple[int, int, int]
    dir_bits: str
    occ_rows: tuple[str, ...]

    def text_key(self) -> str:
        X, Y, Z = self.dims
        return f"{X} {Y} {Z}|{self.dir_bits}|" + "|".join(self.occ_rows)


def serial_index(x: int, y: int, X: int) -> int:
    return y * X + (x if y % 2 == 0 else X - 1 - x)


def serial_cell(i: int, X: int) -> tuple[int, int]:
    y, k = divmod(i, X)
    return (k if y % 2 == 0 else X - 1 - k), y


def direction_row(X: int, Y: int) -> str:
    return "".join(str(y % 2) * X for y in range(Y))


def encode_frame(s: Iterable, frame: int) -> Encoding:
    """Rotate by ``frame``, move the box corner to the origin, serialize."""
    vox = normalize(rotate_shape(s, frame))
    X, Y, Z = min_bbox(vox).dims
    rows = []
    for z in range(Z):
        bits = ["0"] * (X * Y)
        for y in range(Y):
            for x in range(X):
                if (x, y, z) in vox:
                    bits[serial_index(x, y, X)] = "1"
        rows.append("".join(bits))
    return Encoding((X, Y, Z), direction_row(X, Y), tuple(rows))


def enumerate_encodings(s: Iterable) -> set[Encoding]:
    """The encoding set of a shape: one per frame, duplicates merged."""
    s = frozenset(s)
    return {encode_frame(s, r) for r in range(N_ROTATIONS)}


def canonical_encoding(s: Iterable) -> Encoding:
    return min(enumerate_encodings(s), key=Encoding.text_key)


def infer_width(dir_bits: str) -> int:
    """Length of the leading run of 0s, after validating the block pattern."""
    if not dir_bits or set(dir_bits) - {"0", "1"}:
        raise EncodingError("direction row must be a non-empty 0/1 string")
    if dir_bits[0] != "0":
        raise EncodingError("direction row must start with 0")
    X = len(dir_bits) - len(dir_bits.lstrip("0"))
    if len(dir_bits) % X or dir_bits != direction_row(X, len(dir_bits) // X):
        raise EncodingError("direction row is not a sequence of alternating blocks")
    return X


def _check(e: Encoding) -> None:
    X, Y, Z = e.dims
    if min(X, Y, Z) < 1:
        raise EncodingError("dims must be positive")
    if len(e.dir_bits) != X * Y:
        raise EncodingError(f"direction row has length {len(e.dir_bits)}, expected {X * Y}")
    w = infer_width(e.dir_bits)
    if w != X:
        raise EncodingError(f"direction row implies width {w}, dims say {X}")
    if len(e.occ_rows) != Z:
        raise EncodingError(f"expected {Z} occupancy rows, got {len(e.occ_rows)}")
    for k, row in enumerate(e.occ_rows):
        if len(row) != X * Y or set(row) - {"0", "1"}:
            raise EncodingError(f"occupancy row {k} must be {X * Y} bits")


def decode(e: Encoding) -> Shape:
    """Inverse of :func:`encode_frame` up to the frame."""
    _check(e)
    X, Y, Z = e.dims
    vox = set()
    for z, row in enumerate(e.occ_rows):
        for i, b in enumerate(row):
            if b == "1":
                x, y = serial_cell(i, X)
                vox.add((x, y, z))
    if not vox:
        raise EncodingError("encoding holds no voxels")
    if not is_connected(vox):
        raise EncodingError("decoded voxels are not connected")
    if min_bbox(vox).dims != (X, Y, Z):
        raise EncodingError("voxels do not span the stated box")
    return frozenset(vox)


# -- decode schedule -----------------------------------------------------------------


@dataclass(frozen=True)
class Place:
    x: int
    y: int
    z: int
    kind: str  # "shape" or "filler"

    @property
    def cell(self):
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class Remove:
    x: int
    y: int
    z: int

    @property
    def cell(self):
        return (self.x, self.y, self.z)


def decode_schedule(e: Encoding) -> list:
    _check(e)
    X, Y, Z = e.dims
    out = []
    for z in range(Z):
        row = e.occ_rows[z]
        for i in range(X * Y):
            x, y = serial_cell(i, X)
            if z > 0 and e.occ_rows[z - 1][i] == "0":
                out.append(Remove(x, y, z - 1))
            out.append(Place(x, y, z, "shape" if row[i] == "1" else "filler"))
    last = e.occ_rows[Z - 1]
    for i in range(X * Y):
        if last[i] == "0":
            x, y = serial_cell(i, X)
            out.append(Remove(x, y, Z - 1))
    return out


@dataclass
class Violation:
    step: int
    removed: tuple
    detached: frozenset


@dataclass
class ScheduleReport:
    removes: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


SCAFFOLDS = ("current-slice", "strict")


def check_schedule_connectivity(e: Encoding, scaffold: str = "current-slice") -> ScheduleReport:
    """Replay the decode schedule and check that finished slices stay attached.

    A virtual BASE node touches every present voxel with ``z == 0`` or
    ``y == Y-1``.  With ``scaffold="current-slice"`` the cells already placed
    in the slice under construction are also held (during the final pass the
    visited cells of the pass layer hold the voxels beneath them).  After
    every removal, each shape voxel in a finished slice must reach BASE
    through present voxels.
    """
    if scaffold not in SCAFFOLDS:
        raise ValueError(f"scaffold must be one of {SCAFFOLDS}")
    X, Y, Z = e.dims
    sched = decode_schedule(e)
    final_start = max(i for i, a in enumerate(sched) if isinstance(a, Place)) + 1
    present: dict = {}
    violations = []
    removes = 0
    current = 0
    pass_visited: set = set()
    for step, act in enumerate(sched):
        if isinstance(act, Place):
            current = act.z
            present[act.cell] = act.kind
            continue
        removes += 1
        if present.get(act.cell) != "filler":
            raise EncodingError(f"schedule removes a non-filler at {act.cell}")
        del present[act.cell]
        if step >= final_start:
            current = Z
            upto = serial_index(act.x, act.y, X)
            pass_visited = {serial_cell(i, X) for i in range(upto + 1)}
        finished = [p for p, k in present.items() if k == "shape" and p[2] < current]
        if not finished:
            continue
        anchored = set()
        for p in present:
            if p[2] == 0 or p[1] == Y - 1:
                anchored.add(p)
            elif scaffold == "current-slice" and (
                p[2] == current or (current == Z and (p[0], p[1]) in pass_visited)
            ):
                anchored.add(p)
        reach = _reach(anchored, present)
        lost = frozenset(p for p in finished if p not in reach)
        if lost:
            violations.append(Violation(step, act.cell, lost))
    return ScheduleReport(removes, violations)


def _reach(seeds: set, present: dict) -> set:
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        x, y, z = stack.pop()
        for q in ((x + 1, y, z), (x - 1, y, z), (x, y + 1, z), (x, y - 1, z), (x, y, z + 1), (x, y, z - 1)):
            if q in present and q not in seen:
                seen.add(q)
                stack.append(q)
    return seen


# -- text format ----------------------------------------------------------------------


def serialize_encoding(e: Encoding) -> str:
    X, Y, Z = e.dims
    return f"{X} {Y} {Z}\n{e.dir_bits}\n" + "".join(r + "\n" for r in e.occ_rows)


def parse_encoding(text: str) -> Encoding:
    lines = []
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((i, line))
    if len(lines) < 3:
        raise EncodingError("encoding needs dims, direction row and occupancy rows")
    n, head = lines[0]
    try:
        dims = tuple(int(t) for t in head.split())
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError
    except ValueError:
        raise EncodingError(f"line {n}: expected three positive integers") from None
    X, Y, Z = dims
    n, dir_bits = lines[1]
    if len(dir_bits) != X * Y or set(dir_bits) - {"0", "1"}:
        raise EncodingError(f"line {n}: direction row must be {X * Y} bits")
    try:
        infer_width(dir_bits)
    except EncodingError as err:
        raise EncodingError(f"line {n}: {err}") from None
    rows = lines[2:]
    if len(rows) != Z:
        raise EncodingError(f"expected {Z} occupancy rows, got {len(rows)}")
    for k, (n, row) in enumerate(rows):
        if len(row) != X * Y or set(row) - {"0", "1"}:
            raise EncodingError(f"line {n}: occupancy row {k} must be {X * Y} bits")
    e = Encoding(dims, dir_bits, tuple(r for _, r in rows))
    _check(e)
    return e
