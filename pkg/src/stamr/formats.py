"""Tileset and scenario text formats.

Tileset::

    tile <name>
      face <+x|-x|+y|-y|+z|-z> glue <label> strength <int> state <on|latent|off>
      signal <face> <label> -> <face> <label> <on|off>
    end

Scenario::

    tau <int>
    mode <stam_r|stam>
    count <tile-name> <int|inf>
    assembly <name>
      at <x> <y> <z> tile <tile-name> rot <0..23>
    end
    count-assembly <name> <int|inf>
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import (
    MODES,
    STAM_R,
    Glue,
    GlueSpec,
    GlueState,
    Signal,
    TilesetError,
    TileType,
    check_strength_consistency,
)
from .rotation import N_ROTATIONS, Face


class FormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def _lines(text: str):
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield i, line.split()


def _face(tok: str, lineno: int) -> Face:
    try:
        return Face.parse(tok)
    except ValueError:
        raise FormatError(lineno, f"bad face {tok!r}") from None


def _state(tok: str, lineno: int, allowed=("on", "latent", "off")) -> GlueState:
    if tok not in allowed:
        raise FormatError(lineno, f"bad state {tok!r}")
    return GlueState(tok)


def parse_count(tok: str, lineno: int = 0):
    if tok == "inf":
        return math.inf
    try:
        n = int(tok)
    except ValueError:
        raise FormatError(lineno, f"bad count {tok!r}") from None
    if n < 0:
        raise FormatError(lineno, "count must be non-negative")
    return n


def format_count(c) -> str:
    return "inf" if c == math.inf else str(int(c))


def parse_tileset(text: str) -> dict[str, TileType]:
    """Parse a tileset; label-family strength conflicts are load errors."""
    types: dict[str, TileType] = {}
    cur = None
    for lineno, tok in _lines(text):
        head = tok[0]
        if head == "tile":
            if cur is not None:
                raise FormatError(lineno, "nested tile block")
            if len(tok) != 2:
                raise FormatError(lineno, "expected: tile <name>")
            cur = (tok[1], [], [], lineno)
        elif head == "end":
            if cur is None:
                raise FormatError(lineno, "end outside tile block")
            name, glues, signals, start = cur
            if name in types:
                raise FormatError(start, f"duplicate tile {name}")
            try:
                types[name] = TileType(name, tuple(glues), tuple(signals))
            except TilesetError as e:
                raise FormatError(start, str(e)) from None
            cur = None
        elif cur is None:
            raise FormatError(lineno, f"{head!r} outside tile block")
        elif head == "face":
            if len(tok) != 8 or tok[2] != "glue" or tok[4] != "strength" or tok[6] != "state":
                raise FormatError(lineno, "expected: face <f> glue <label> strength <int> state <s>")
            try:
                glue = Glue(tok[3], int(tok[5]))
            except (ValueError, TilesetError) as e:
                raise FormatError(lineno, str(e)) from None
            cur[1].append(GlueSpec(_face(tok[1], lineno), glue, _state(tok[7], lineno)))
        elif head == "signal":
            if len(tok) != 7 or tok[3] != "->":
                raise FormatError(lineno, "expected: signal <f> <label> -> <f> <label> <on|off>")
            cur[2].append(
                Signal(
                    (_face(tok[1], lineno), tok[2]),
                    (_face(tok[4], lineno), tok[5]),
                    _state(tok[6], lineno, ("on", "off")),
                )
            )
        else:
            raise FormatError(lineno, f"unknown directive {head!r}")
    if cur is not None:
        raise FormatError(cur[3], f"tile {cur[0]} not closed")
    try:
        check_strength_consistency(types.values())
    except TilesetError as e:
        raise FormatError(0, str(e)) from None
    return types


def serialize_tileset(types) -> str:
    out = []
    for t in types:
        out.append(f"tile {t.name}")
        for g in t.glues:
            out.append(
                f"  face {g.face.value} glue {g.label} strength {g.strength} state {g.state.value}"
            )
        for s in t.signals:
            out.append(
                f"  signal {s.source[0].value} {s.source[1]} -> "
                f"{s.target[0].value} {s.target[1]} {s.action.value}"
            )
        out.append("end")
    return "\n".join(out) + "\n"


@dataclass
class Scenario:
    tau: int = 2
    mode: str = STAM_R
    tile_counts: dict = field(default_factory=dict)
    assemblies: dict = field(default_factory=dict)  # name -> [(point, tile name, rot)]
    assembly_counts: dict = field(default_factory=dict)


def parse_scenario(text: str, types: dict[str, TileType] | None = None) -> Scenario:
    sc = Scenario()
    cur = None
    for lineno, tok in _lines(text):
        head = tok[0]
        if cur is not None and head not in ("at", "end"):
            raise FormatError(lineno, f"{head!r} inside assembly block")
        if head == "tau":
            if len(tok) != 2 or not tok[1].isdigit() or int(tok[1]) < 1:
                raise FormatError(lineno, "expected: tau <positive int>")
            sc.tau = int(tok[1])
        elif head == "mode":
            if len(tok) != 2 or tok[1] not in MODES:
                raise FormatError(lineno, "expected: mode stam_r|stam")
            sc.mode = tok[1]
        elif head == "count":
            if len(tok) != 3:
                raise FormatError(lineno, "expected: count <tile> <int|inf>")
            if types is not None and tok[1] not in types:
                raise FormatError(lineno, f"unknown tile {tok[1]}")
            sc.tile_counts[tok[1]] = parse_count(tok[2], lineno)
        elif head == "assembly":
            if len(tok) != 2:
                raise FormatError(lineno, "expected: assembly <name>")
            if tok[1] in sc.assemblies:
                raise FormatError(lineno, f"duplicate assembly {tok[1]}")
            cur = tok[1]
            sc.assemblies[cur] = []
        elif head == "at":
            if cur is None:
                raise FormatError(lineno, "at outside assembly block")
            if len(tok) != 8 or tok[4] != "tile" or tok[6] != "rot":
                raise FormatError(lineno, "expected: at <x> <y> <z> tile <name> rot <id>")
            try:
                p = (int(tok[1]), int(tok[2]), int(tok[3]))
                rot = int(tok[7])
            except ValueError:
                raise FormatError(lineno, "bad integer") from None
            if not 0 <= rot < N_ROTATIONS:
                raise FormatError(lineno, f"rotation id {rot} out of range")
            if types is not None and tok[5] not in types:
                raise FormatError(lineno, f"unknown tile {tok[5]}")
            if any(q == p for q, _, _ in sc.assemblies[cur]):
                raise FormatError(lineno, f"point {p} used twice")
            sc.assemblies[cur].append((p, tok[5], rot))
        elif head == "end":
            if cur is None:
                raise FormatError(lineno, "end outside assembly block")
            if not sc.assemblies[cur]:
                raise FormatError(lineno, f"assembly {cur} is empty")
            cur = None
        elif head == "count-assembly":
            if len(tok) != 3:
                raise FormatError(lineno, "expected: count-assembly <name> <int|inf>")
            if tok[1] not in sc.assemblies:
                raise FormatError(lineno, f"unknown assembly {tok[1]}")
            sc.assembly_counts[tok[1]] = parse_count(tok[2], lineno)
        else:
            raise FormatError(lineno, f"unknown directive {head!r}")
    if cur is not None:
        raise FormatError(0, f"assembly {cur} not closed")
    return sc


def serialize_scenario(sc: Scenario) -> str:
    out = [f"tau {sc.tau}", f"mode {sc.mode}"]
    for name, c in sc.tile_counts.items():
        out.append(f"count {name} {format_count(c)}")
    for name, cells in sc.assemblies.items():
        out.append(f"assembly {name}")
        for (x, y, z), tile, rot in cells:
            out.append(f"  at {x} {y} {z} tile {tile} rot {rot}")
        out.append("end")
    for name, c in sc.assembly_counts.items():
        out.append(f"count-assembly {name} {format_count(c)}")
    return "\n".join(out) + "\n"
