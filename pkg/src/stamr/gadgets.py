"""Gadget builders that emit tile types plus runnable scenarios.

Every builder namespaces its glue labels with ``ns`` so bundles can share a
system.  All scenarios use tau = 2.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .engine import RunConfig, RunResult, SystemState, run_random
from .formats import Scenario, serialize_scenario, serialize_tileset
from .geometry import congruent, neighborhood_dirs, neighborhood_class, normalize
from .model import (
    STAM,
    STAM_R,
    Glue,
    GlueSpec,
    GlueState,
    Signal,
    Supertile,
    Tile,
    TileType,
    add,
    check_strength_consistency,
)
from .rotation import FACES, IDENTITY, N_ROTATIONS, Face, rotate

ON, LATENT, OFF = GlueState.ON, GlueState.LATENT, GlueState.OFF
TAU = 2

FACE_NAMES = {
    Face.PX: "px", Face.MX: "mx", Face.PY: "py", Face.MY: "my", Face.PZ: "pz", Face.MZ: "mz",
}


class GadgetError(ValueError):
    pass


# -- tile construction helpers ---------------------------------------------------------


class TileBuilder:
    """Mutable staging area for one tile type."""

    def __init__(self, name: str):
        self.name = name
        self.glues: list[GlueSpec] = []
        self.signals: list[Signal] = []

    def glue(self, face: Face, label: str, strength: int, state: GlueState = ON) -> "TileBuilder":
        self.glues.append(GlueSpec(face, Glue(label, strength), state))
        return self

    def signal(self, src: tuple[Face, str], dst: tuple[Face, str], action: GlueState) -> "TileBuilder":
        self.signals.append(Signal(src, dst, action))
        return self

    def has(self, face: Face, label: str) -> bool:
        return any(g.face is face and g.label == label for g in self.glues)

    def build(self) -> TileType:
        return TileType(self.name, tuple(self.glues), tuple(self.signals))


def structural(builders: dict, cells: dict, edges: Iterable[tuple], ns: str, strength: int = 2,
               state: GlueState = ON) -> None:
    """Unique glue pairs between the named cells of each edge."""
    for k, (u, v) in enumerate(edges):
        d = tuple(b - a for a, b in zip(cells[u], cells[v]))
        f = Face.from_vec(d)
        label = f"{ns}_{u}_{v}"
        builders[u].glue(f, label, strength, state)
        builders[v].glue(f.opposite, label + "*", strength, state)


def assembly(types: dict[str, TileType], cells: dict[str, tuple], rots: dict | None = None) -> Supertile:
    rots = rots or {}
    return Supertile({p: Tile(types[n], rots.get(n, IDENTITY)) for n, p in cells.items()})


def build_dissolve_glue(tile: TileType, trigger: tuple[Face, str]) -> TileType:
    """Add signals from ``trigger`` that turn every glue of ``tile`` off."""
    if (trigger[0], trigger[1]) not in {(g.face, g.label) for g in tile.glues}:
        raise GadgetError(f"tile {tile.name} has no glue {trigger[1]} on {trigger[0].value}")
    extra = []
    for g in tile.glues:
        s = Signal(trigger, (g.face, g.label), OFF)
        if s not in tile.signals:
            extra.append(s)
    return TileType(tile.name, tile.glues, tile.signals + tuple(extra))


# -- expectations ---------------------------------------------------------------------------


@dataclass
class Outcome:
    ok: bool
    detail: str = ""


@dataclass(frozen=True)
class TerminalShapeEquals:
    """Some terminal supertile has this point set (up to the mode's motions) and tile names."""

    points: frozenset
    names: tuple | None = None
    name = "terminal-shape-equals"

    def check(self, run: RunResult, bundle: "GadgetBundle") -> Outcome:
        for sid in run.terminal_ids():
            st = run.state.registry[sid]
            if self.names is not None and tuple(st.tile_names()) != tuple(sorted(self.names)):
                continue
            if _same_shape(st.points, self.points, run.state.mode):
                return Outcome(True)
        return Outcome(False, f"no terminal supertile with {len(self.points)} points")

    def describe(self) -> str:
        return f"{self.name} {len(self.points)}"


def _same_shape(a, b, mode) -> bool:
    if mode == STAM:
        return normalize(a) == normalize(b)
    return congruent(a, b)


@dataclass(frozen=True)
class GlueStateEquals:
    """Every instance of ``tile`` in the terminal supertiles holding ``within`` has this glue state."""

    tile: str
    face: Face
    label: str
    state: GlueState
    within: str | None = None
    name = "glue-state-equals"

    def check(self, run: RunResult, bundle: "GadgetBundle") -> Outcome:
        seen = 0
        for sid in run.terminal_ids():
            st = run.state.registry[sid]
            names = st.tile_names()
            if self.within is not None and self.within not in names:
                continue
            for t in st.tiles.values():
                if t.name != self.tile:
                    continue
                seen += 1
                got = t.state_of(self.face, self.label)
                if got is not self.state:
                    return Outcome(False, f"{self.tile} {self.face.value} {self.label} is {got.value}")
        if not seen:
            return Outcome(False, f"no terminal instance of {self.tile}")
        return Outcome(True)

    def describe(self) -> str:
        return f"{self.name} {self.tile} {self.face.value} {self.label} {self.state.value}"


@dataclass(frozen=True)
class JunkSizeLe:
    """Every terminal supertile without an input tile has at most ``bound`` tiles."""

    bound: int
    inputs: frozenset
    name = "junk-size-le"

    def check(self, run: RunResult, bundle: "GadgetBundle") -> Outcome:
        for sid in run.terminal_ids():
            st = run.state.registry[sid]
            if self.inputs & set(st.tile_names()):
                continue
            if len(st) > self.bound:
                return Outcome(False, f"junk of size {len(st)} > {self.bound}")
        return Outcome(True)

    def describe(self) -> str:
        return f"{self.name} {self.bound} inputs={','.join(sorted(self.inputs))}"


TRACE_CHECKS: dict[str, Callable[[RunResult, "GadgetBundle"], Outcome]] = {}


def trace_check(name: str):
    def deco(fn):
        TRACE_CHECKS[name] = fn
        return fn

    return deco


@dataclass(frozen=True)
class TraceOrder:
    check_name: str
    name = "trace-order"

    def check(self, run: RunResult, bundle: "GadgetBundle") -> Outcome:
        return TRACE_CHECKS[self.check_name](run, bundle)

    def describe(self) -> str:
        return f"{self.name} {self.check_name}"


@dataclass(frozen=True)
class AllOf:
    parts: tuple
    name = "all-of"

    def check(self, run, bundle) -> Outcome:
        for p in self.parts:
            out = p.check(run, bundle)
            if not out.ok:
                return Outcome(False, f"{p.describe()}: {out.detail}")
        return Outcome(True)

    def describe(self) -> str:
        return "; ".join(p.describe() for p in self.parts)


# -- bundles and scenarios ----------------------------------------------------------------


@dataclass
class GadgetBundle:
    name: str
    tile_types: list
    initial: list  # [(Supertile, count)]
    expectation: object
    tau: int = TAU
    mode: str = STAM_R
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        check_strength_consistency(self.tile_types)

    def types(self) -> dict[str, TileType]:
        return {t.name: t for t in self.tile_types}

    def state(self) -> SystemState:
        return SystemState.from_supertiles(self.initial, self.tau, self.mode)

    def tileset_text(self) -> str:
        return serialize_tileset(self.tile_types)

    def scenario_text(self) -> str:
        sc = Scenario(self.tau, self.mode)
        k = 0
        for st, n in self.initial:
            if len(st) == 1:
                (t,) = st.tiles.values()
                sc.tile_counts[t.name] = n
            else:
                name = f"asm{k}"
                k += 1
                sc.assemblies[name] = [(p, t.name, t.rot) for p, t in sorted(st.tiles.items())]
                sc.assembly_counts[name] = n
        return serialize_scenario(sc) + f"# expect {self.expectation.describe()}\n"


def input_names(bundle: GadgetBundle) -> frozenset:
    """Tile names of the bundle's input assembly (terminals holding one are not junk)."""
    parts = bundle.expectation.parts if isinstance(bundle.expectation, AllOf) else (bundle.expectation,)
    for p in parts:
        if isinstance(p, JunkSizeLe):
            return frozenset(p.inputs)
    info = bundle.info
    if "host_cells" in info and "types" in info:
        return frozenset(info["types"][n].name for n in info["host_cells"])
    for st, _ in bundle.initial:
        if len(st) > 1:
            return frozenset(st.tile_names())
    return frozenset()


@dataclass
class ScenarioResult:
    verdict: str  # pass, fail or inconclusive
    detail: str
    run: RunResult

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def run_scenario(bundle: GadgetBundle, seed: int, max_steps: int = 5000, **config) -> ScenarioResult:
    run = run_random(bundle.state(), RunConfig(seed=seed, max_steps=max_steps, **config))
    if not run.quiescent:
        return ScenarioResult("inconclusive", f"not quiescent after {run.steps} steps", run)
    out = bundle.expectation.check(run, bundle)
    return ScenarioResult("pass" if out.ok else "fail", out.detail, run)


# -- detector gadgets ---------------------------------------------------------------------------


def _connect(cells: list[tuple], avoid: set) -> list[tuple[tuple, tuple]]:
    """Tree edges joining ``cells`` by lattice paths that avoid ``avoid``."""
    tree = {cells[0]}
    edges = []
    for target in cells[1:]:
        if target in tree:
            continue
        prev = {target: None}
        queue = deque([target])
        hit = None
        while queue:
            p = queue.popleft()
            if p in tree:
                hit = p
                break
            for f in FACES:
                q = add(p, f.vec)
                if q not in prev and q not in avoid and max(map(abs, q)) <= 4:
                    prev[q] = p
                    queue.append(q)
        if hit is None:
            raise GadgetError("cannot connect host cells")
        p = hit
        while prev[p] is not None:
            edges.append((prev[p], p))
            tree.add(prev[p])
            p = prev[p]
    return edges


def build_detector(arity: str = "single", triggers: Sequence[tuple[Face, int]] | None = None,
                   effects: Sequence[tuple[Face, str]] | None = None, dissolve: bool = True,
                   tau: int = TAU, ns: str = "det", duple_axis: Face = Face.PX,
                   detector_count: float = math.inf, mode: str = STAM_R) -> GadgetBundle:
    """A detector for the host configuration implied by ``triggers``.

    ``triggers`` lists (detector face, strength).  For ``single`` all trigger
    faces belong to one detector tile at the origin; for ``duple`` there are
    exactly two triggers, one per tile, the second tile sitting at
    ``duple_axis`` from the first and joined to it by a unique strength-2 glue.
    Each trigger abuts a host tile exposing the matching glue; ``effects[k]``
    is the (host face, label) the k-th host tile activates once detected.
    ``detector_count`` sets the size of each detector tile pool.
    """
    if triggers is None:
        triggers = [(Face.MX, 1), (Face.MY, 1)]
    strengths = [s for _, s in triggers]
    if sum(strengths) < tau:
        raise GadgetError("trigger strengths must reach tau")
    for k in range(len(strengths)):
        if sum(strengths) - strengths[k] >= tau:
            raise GadgetError("a proper subset of the triggers already reaches tau")
    if arity not in ("single", "duple"):
        raise GadgetError("arity must be single or duple")
    if arity == "duple" and len(triggers) != 2:
        raise GadgetError("a duple detector has exactly two triggers")

    det_cells = {"D": (0, 0, 0)} if arity == "single" else {"D1": (0, 0, 0), "D2": duple_axis.vec}
    owner = ["D"] * len(triggers) if arity == "single" else ["D1", "D2"]
    b = {n: TileBuilder(f"{ns}_{n}") for n in det_cells}
    host_cells = {}
    hb = {}
    if effects is None:
        effects = [(f, f"{ns}_x") for f, _ in triggers]
    for k, ((face, s), who) in enumerate(zip(triggers, owner)):
        cell = add(det_cells[who], face.vec)
        if cell in det_cells.values() or cell in host_cells.values():
            raise GadgetError("trigger cells must be distinct host cells")
        name = f"H{k}"
        host_cells[name] = cell
        lab = f"{ns}_d{k}"
        b[who].glue(face, lab + "*", s)
        h = hb[name] = TileBuilder(f"{ns}_{name}")
        h.glue(face.opposite, lab, s)
        ef, el = effects[k]
        h.glue(ef, el, 1, LATENT)
        h.signal((face.opposite, lab), (ef, el), ON)
        if dissolve:
            h.signal((face.opposite, lab), (face.opposite, lab), OFF)
    if arity == "duple":
        structural(b, det_cells, [("D1", "D2")], ns)
    if dissolve:
        for who, tb in b.items():
            for g in list(tb.glues):
                if g.label.startswith(f"{ns}_d"):
                    for g2 in list(tb.glues):
                        if g2.label.startswith(f"{ns}_d"):
                            tb.signal((g.face, g.label), (g2.face, g2.label), OFF)
    # join host cells with extra base tiles
    avoid = set(det_cells.values())
    hosts = list(host_cells.values())
    edges = _connect(hosts, avoid)
    cell_name = {p: n for n, p in host_cells.items()}
    for u, v in edges:
        for p in (u, v):
            if p not in cell_name:
                n = f"B{len([k for k in cell_name.values() if k.startswith('B')])}"
                cell_name[p] = n
                host_cells[n] = p
                hb[n] = TileBuilder(f"{ns}_{n}")
    structural(hb, host_cells, [(cell_name[u], cell_name[v]) for u, v in edges], ns)
    types = {n: tb.build() for n, tb in {**b, **hb}.items()}
    host = assembly(types, host_cells)
    initial = [(host, 1)]
    if arity == "single":
        initial.append((Supertile.singleton(types["D"]), detector_count))
    else:
        initial += [(Supertile.singleton(types[n]), detector_count) for n in ("D1", "D2")]
    checks = []
    for k, (ef, el) in enumerate(effects):
        checks.append(GlueStateEquals(f"{ns}_H{k}", ef, el, ON))
    names = sorted(t.name for t in host.tiles.values())
    if dissolve:
        checks.append(TerminalShapeEquals(frozenset(host_cells.values()), tuple(names)))
    else:
        allcells = frozenset(host_cells.values()) | frozenset(det_cells.values())
        checks.append(TerminalShapeEquals(allcells, tuple(names + [types[n].name for n in det_cells])))
    return GadgetBundle(
        f"detector-{arity}", list(types.values()), initial, AllOf(tuple(checks)), tau, mode,
        info={"host_cells": host_cells, "detector_cells": det_cells, "types": types},
    )


def diagonal_detector(dissolve: bool = False) -> GadgetBundle:
    """Two diagonal host tiles exposing strength-1 ``d``; the detector turns their ``x`` on."""
    return build_detector("single", [(Face.MX, 1), (Face.MY, 1)], dissolve=dissolve, ns="diag")


# -- corner gadgets ---------------------------------------------------------------------------


def build_corner_gadget(dim: str = "2d", target: str = "g", activation: dict | None = None,
                        prebuilt: bool = True, mode: str = STAM_R, ns: str = "cg") -> GadgetBundle:
    """Corner gadget plus a host block whose corner tile exposes ``target``.

    ``2d``: 3 tiles around the convex corner of a 2x2 block; on attachment
    each outer tile activates the edge glue named in ``activation`` (keyed by
    ``A``/``C``) on its face along the host.  ``3d``: 7 tiles forming a
    2x2x2 cube minus a corner, dissolving carefully once all three interior
    bonds exist.  With ``prebuilt`` the gadget starts assembled, otherwise as
    singletons.
    """
    if dim == "2d":
        return _corner_2d(target, activation, prebuilt, mode, ns)
    if dim == "3d":
        return _corner_3d(target, prebuilt, mode, ns)
    raise GadgetError("dim must be 2d or 3d")


def _corner_2d(target, activation, prebuilt, mode, ns) -> GadgetBundle:
    g = f"{ns}_{target}"
    activation = activation or {"A": f"{ns}_e", "C": f"{ns}_e"}
    hosts = {"h00": (0, 0, 0), "h10": (1, 0, 0), "h01": (0, 1, 0), "h11": (1, 1, 0)}
    gad = {"A": (2, 1, 0), "B": (2, 2, 0), "C": (1, 2, 0)}
    b = {n: TileBuilder(f"{ns}_{n}") for n in {**hosts, **gad}}
    structural(b, hosts, [("h00", "h10"), ("h00", "h01"), ("h10", "h11"), ("h01", "h11")], ns)
    structural(b, gad, [("A", "B"), ("B", "C")], ns)
    b["h11"].glue(Face.PX, g, 1).glue(Face.PY, g, 1)
    b["A"].glue(Face.MX, g + "*", 1).glue(Face.MY, activation["A"], 1, LATENT)
    b["A"].signal((Face.MX, g + "*"), (Face.MY, activation["A"]), ON)
    b["C"].glue(Face.MY, g + "*", 1).glue(Face.MX, activation["C"], 1, LATENT)
    b["C"].signal((Face.MY, g + "*"), (Face.MX, activation["C"]), ON)
    types = {n: tb.build() for n, tb in b.items()}
    host = assembly(types, hosts)
    initial = [(host, 1)]
    if prebuilt:
        initial.append((assembly(types, gad), 1))
    else:
        initial += [(Supertile.singleton(types[n]), 1) for n in gad]
    allcells = frozenset(hosts.values()) | frozenset(gad.values())
    exp = AllOf((
        TerminalShapeEquals(allcells, tuple(types[n].name for n in {**hosts, **gad})),
        GlueStateEquals(f"{ns}_A", Face.MY, activation["A"], ON),
        GlueStateEquals(f"{ns}_C", Face.MX, activation["C"], ON),
    ))
    return GadgetBundle("corner-2d", list(types.values()), initial, exp, TAU, mode,
                        info={"host_cells": hosts, "gadget_cells": gad, "types": types, "g": g})


CORNER3D_CELLS = {
    "X": (1, 0, 0), "Y": (0, 1, 0), "Z": (0, 0, 1),
    "XY": (1, 1, 0), "XZ": (1, 0, 1), "YZ": (0, 1, 1), "O": (1, 1, 1),
}


def _corner_3d(target, prebuilt, mode, ns) -> GadgetBundle:
    g = f"{ns}_{target}"
    cells = CORNER3D_CELLS
    hosts = {f"h{x + 1}{y + 1}{z + 1}": (x, y, z) for x in (-1, 0) for y in (-1, 0) for z in (-1, 0)}
    H = "h111"
    b = {n: TileBuilder(f"{ns}_{n}") for n in {**hosts, **cells}}
    host_edges = [
        (u, v) for u in hosts for v in hosts
        if u < v and sum(abs(a - c) for a, c in zip(hosts[u], hosts[v])) == 1
    ]
    structural(b, hosts, host_edges, f"{ns}h")
    for f in (Face.PX, Face.PY, Face.PZ):
        b[H].glue(f, g, 1)

    def pair(u, v, label, strength, su=ON, sv=ON):
        f = Face.from_vec(tuple(q - p for p, q in zip(cells[u], cells[v])))
        lab = f"{ns}_{label}"
        b[u].glue(f, lab, strength, su)
        b[v].glue(f.opposite, lab + "*", strength, sv)
        return (f, lab), (f.opposite, lab + "*")

    # corner glues: never turned off
    pair("O", "XY", "cXY", 2)
    pair("O", "XZ", "cXZ", 2)
    pair("O", "YZ", "cYZ", 2)
    # edge glues
    aX_xy, aX_x = pair("XY", "X", "aX", 2)
    aY_yz, aY_y = pair("YZ", "Y", "aY", 2)
    aZ_xz, aZ_z = pair("XZ", "Z", "aZ", 2)
    # target glues
    gX = (Face.MX, g + "*")
    gY = (Face.MY, g + "*")
    gZ = (Face.MZ, g + "*")
    b["X"].glue(*gX, 1)
    b["Y"].glue(*gY, 1)
    b["Z"].glue(*gZ, 1)
    # sequential gates: s binds only after all three target bonds
    p_x, p_xy = pair("X", "XY", "p", 1, LATENT, ON)
    q_y, q_xy = pair("Y", "XY", "q", 1, LATENT, LATENT)
    s_y, s_yz = pair("Y", "YZ", "s", 1, LATENT, LATENT)
    t_z, t_yz = pair("Z", "YZ", "t", 1, LATENT, ON)
    # dissolve helpers, a tree rooted at the far corner side
    k_yz, k_z = pair("YZ", "Z", "k", 1, LATENT, ON)
    m_z, m_xz = pair("Z", "XZ", "m", 1, LATENT, ON)
    n_xz, n_x = pair("XZ", "X", "n", 1, LATENT, ON)
    r_x, r_xy = pair("X", "XY", "r", 1, LATENT, ON)

    b["X"].signal(gX, p_x, ON)
    b["XY"].signal(p_xy, q_xy, ON)
    b["Y"].signal(gY, q_y, ON)
    b["Y"].signal(q_y, s_y, ON)
    b["Z"].signal(gZ, t_z, ON)
    b["YZ"].signal(t_yz, s_yz, ON)

    def all_off(tile, trig):
        for gl in list(b[tile].glues):
            b[tile].signal(trig, (gl.face, gl.label), OFF)

    all_off("Y", s_y)
    for tgt in (aY_yz, s_yz, t_yz):
        b["YZ"].signal(s_yz, tgt, OFF)
    b["YZ"].signal(s_yz, k_yz, ON)
    b["Z"].signal(k_z, m_z, ON)
    all_off("Z", m_z)
    for tgt in (aZ_xz, m_xz):
        b["XZ"].signal(m_xz, tgt, OFF)
    b["XZ"].signal(m_xz, n_xz, ON)
    b["X"].signal(n_x, r_x, ON)
    all_off("X", r_x)
    for tgt in (aX_xy, p_xy, q_xy, r_xy):
        b["XY"].signal(r_xy, tgt, OFF)

    types = {n: tb.build() for n, tb in b.items()}
    host = assembly(types, hosts)
    initial = [(host, 1)]
    if prebuilt:
        initial.append((assembly(types, cells), 1))
    else:
        initial += [(Supertile.singleton(types[n]), 1) for n in cells]
    inputs = frozenset(types[n].name for n in hosts)
    exp = AllOf((JunkSizeLe(4, inputs), TraceOrder("corner-three-bonds-before-dissolve")))
    return GadgetBundle("corner-3d", list(types.values()), initial, exp, TAU, mode,
                        info={"host_cells": hosts, "gadget_cells": cells, "types": types,
                              "g": g, "H": types[H].name, "gadget_names": [types[n].name for n in cells]})


def gadget_only(bundle: GadgetBundle) -> GadgetBundle:
    """The corner-gadget tiles as singletons, without the host."""
    types = bundle.info["types"]
    names = bundle.info["gadget_cells"]
    initial = [(Supertile.singleton(types[n]), 1) for n in names]
    target = assembly(types, names)
    exp = TerminalShapeEquals(frozenset(names.values()), tuple(types[n].name for n in names))
    return GadgetBundle(bundle.name + "-self-assembly", [types[n] for n in names], initial, exp,
                        bundle.tau, bundle.mode, info={**bundle.info, "target": target})


def _bonded_on(st: Supertile, name: str, label: str) -> int:
    n = 0
    for bond in st.bonds:
        for p, gi in bond:
            t = st.tiles[p]
            if t.name == name and t.type.glues[gi].label == label:
                n += 1
    return n


@trace_check("corner-three-bonds-before-dissolve")
def _corner_order(run: RunResult, bundle: GadgetBundle) -> Outcome:
    """No off signal of a gadget tile runs before a supertile held all three target bonds."""
    g = bundle.info["g"]
    H = bundle.info["H"]
    gadget = set(bundle.info["gadget_names"])
    three = None
    for ev in run.trace:
        if ev.after is not None and three is None and _bonded_on(ev.after, H, g) == 3:
            three = ev.step
        if ev.tile_before is not None and ev.tile_before.name in gadget:
            sig = ev.tile_before.type.signals[ev.action.signal]
            if sig.action is OFF and (three is None or three > ev.step):
                return Outcome(False, f"off signal on {ev.tile_before.name} at step {ev.step} before three bonds")
    return Outcome(True)


# -- uniformly covered shapes and filler tiles ------------------------------------------------


def _rotation_for(dirs: frozenset, canon: frozenset) -> int:
    for r in range(N_ROTATIONS):
        if frozenset(rotate(r, f) for f in canon) == dirs:
            return r
    raise GadgetError("directions are not in one rotation class")


def uniform_shape_assembly(shape: Iterable, ns: str = "sh", surface: str | None = None,
                           reinforce: bool = False, planar: bool = False) -> tuple[dict[str, TileType], Supertile]:
    """Tile ``shape`` with one tile type per neighborhood class.

    Internal faces carry ``s`` and ``s*`` (strength 1 each); exposed faces
    carry the strength-1 surface glue.  With ``reinforce`` every exposed face
    also carries a latent ``r*`` turned on when the surface glue bonds.
    ``planar`` leaves the +z and -z faces bare.
    """
    shape = frozenset(shape)
    gx = surface or f"{ns}_gx"
    s = f"{ns}_s"
    r = f"{ns}_r"
    canon: dict[str, frozenset] = {}
    types: dict[str, TileType] = {}
    tiles = {}
    for p in sorted(shape):
        dirs = frozenset(Face.from_vec(d) for d in neighborhood_dirs(shape, p))
        cls = neighborhood_class(shape, p) if dirs else "0"
        if cls not in canon:
            canon[cls] = dirs
            tb = TileBuilder(f"{ns}_{cls.replace('-', '_').replace('+', 'p')}")
            for f in FACES:
                if f in dirs:
                    tb.glue(f, s, 1).glue(f, s + "*", 1)
                elif not (planar and f in (Face.PZ, Face.MZ)):
                    tb.glue(f, gx, 1)
                    if reinforce:
                        tb.glue(f, r + "*", 1, LATENT)
                        tb.signal((f, gx), (f, r + "*"), ON)
            types[cls] = tb.build()
        tiles[p] = Tile(types[cls], _rotation_for(dirs, canon[cls]))
    return {t.name: t for t in types.values()}, Supertile(tiles)


def build_filler_tiles(gx: str = "sh_gx", gf: str = "fl_gf", r: str = "sh_r", ns: str = "fl",
                       drop_input: bool = False, planar: bool = False) -> dict[str, TileType]:
    """The three filler variants {gx*,gx*}, {gf*,gf*}, {gx*,gf*}.

    Inputs sit on -x and -y.  Sequence: the -x prior glue bonds, turning on
    the -x reinforcing glue; once that bonds, the -y reinforcing glue turns
    on; once that bonds, the four other faces expose ``gf`` (plus a latent
    ``r*`` turned on when that ``gf`` bonds).  ``drop_input`` removes the -y
    prior glue from every variant (negative control).  ``planar`` keeps the
    outputs on +x and +y only.
    """
    if gf.split("_")[-1] == gx.split("_")[-1] and gf == gx:
        raise GadgetError("gx and gf must differ")
    out = {}
    for tag, (a, bb) in {"xx": (gx, gx), "ff": (gf, gf), "xf": (gx, gf)}.items():
        tb = TileBuilder(f"{ns}_{tag}")
        tb.glue(Face.MX, a + "*", 1).glue(Face.MX, r, 1, LATENT)
        if not drop_input:
            tb.glue(Face.MY, bb + "*", 1)
        tb.glue(Face.MY, r, 1, LATENT)
        tb.signal((Face.MX, a + "*"), (Face.MX, r), ON)
        tb.signal((Face.MX, r), (Face.MY, r), ON)
        for f in (Face.PX, Face.PY) if planar else (Face.PX, Face.PY, Face.PZ, Face.MZ):
            tb.glue(f, gf, 1, LATENT).glue(f, r + "*", 1, LATENT)
            tb.signal((Face.MY, r), (f, gf), ON)
            tb.signal((f, gf), (f, r + "*"), ON)
        out[tb.name] = tb.build()
    return out


def build_filler_scenario(shape: Iterable, drop_input: bool = False, ns: str = "sh",
                          fns: str = "fl", mode: str = STAM_R) -> GadgetBundle:
    """A uniformly covered 2D shape plus infinite filler pools; expects the box filled."""
    shape = frozenset(shape)
    gx, r = f"{ns}_gx", f"{ns}_r"
    planar = len({p[2] for p in shape}) == 1
    stypes, st = uniform_shape_assembly(shape, ns, gx, reinforce=True, planar=planar)
    ftypes = build_filler_tiles(gx, f"{fns}_gf", r, fns, drop_input, planar)
    initial = [(st, 1)] + [(Supertile.singleton(t), math.inf) for t in ftypes.values()]
    lo = [min(p[i] for p in shape) for i in range(3)]
    hi = [max(p[i] for p in shape) for i in range(3)]
    box = frozenset(
        (x, y, z) for x in range(lo[0], hi[0] + 1) for y in range(lo[1], hi[1] + 1) for z in range(lo[2], hi[2] + 1)
    )
    exp = AllOf((TerminalShapeEquals(box), TraceOrder("filler-guard")))
    return GadgetBundle("filler", list(stypes.values()) + list(ftypes.values()), initial, exp, TAU, mode,
                        info={"gx": gx, "gf": f"{fns}_gf", "r": r, "fillers": set(ftypes), "box": box})


L_TROMINO = frozenset({(0, 0, 0), (1, 0, 0), (0, 1, 0)})
STAIRCASE4 = frozenset((x, y, 0) for x in range(4) for y in range(4) if x + y <= 3)


@trace_check("filler-guard")
def _filler_guard(run: RunResult, bundle: GadgetBundle) -> Outcome:
    """A filler's gf output turns on only while both input reinforcing glues are on."""
    fillers = bundle.info["fillers"]
    gf, r = bundle.info["gf"], bundle.info["r"]
    for ev in run.trace:
        t = ev.tile_after
        if t is None or t.name not in fillers or not ev.changed:
            continue
        sig = t.type.signals[ev.action.signal]
        if sig.target[1] != gf or sig.action is not ON:
            continue
        for f in (Face.MX, Face.MY):
            if t.state_of(f, r) is not ON:
                return Outcome(False, f"{t.name} exposed {gf} at step {ev.step} before {f.value} {r} was on")
    return Outcome(True)


# -- tile dissolving row --------------------------------------------------------------------------


def build_dissolve_row(n: int = 3, ns: str = "dr") -> GadgetBundle:
    """A 1xn row that dissolves tile by tile after a trigger tile binds its -x end.

    A triggered tile switches off everything except its +x glues and turns on
    a helper toward its successor; once the helper bonds it switches off its
    +x glues and the successor is triggered by the same bond.
    """
    if n < 1:
        raise GadgetError("row needs at least one tile")
    cells = {f"T{i}": (i, 0, 0) for i in range(n)}
    b = {k: TileBuilder(f"{ns}_{k}") for k in cells}
    structural(b, cells, [(f"T{i}", f"T{i + 1}") for i in range(n - 1)], ns)
    K = TileBuilder(f"{ns}_K").glue(Face.PX, f"{ns}_k", 2)
    b["T0"].glue(Face.MX, f"{ns}_k*", 2)
    h = f"{ns}_h"
    for i in range(n):
        tb = b[f"T{i}"]
        if i + 1 < n:
            tb.glue(Face.PX, h, 1, LATENT)
        if i > 0:
            tb.glue(Face.MX, h + "*", 1)
    types = {}
    for i in range(n):
        tb = b[f"T{i}"]
        trig = (Face.MX, f"{ns}_k*") if i == 0 else (Face.MX, h + "*")
        tt = tb.build()
        plus = [(g.face, g.label) for g in tt.glues if g.face is Face.PX]
        rest = [(g.face, g.label) for g in tt.glues if g.face is not Face.PX]
        if i + 1 < n:
            for tgt in rest:
                tb.signal(trig, tgt, OFF)
            tb.signal(trig, (Face.PX, h), ON)
            for tgt in plus:
                tb.signal((Face.PX, h), tgt, OFF)
            types[tt.name] = tb.build()
        else:
            types[tt.name] = build_dissolve_glue(tt, trig)
    kt = K.build()
    types[kt.name] = kt
    row = Supertile({p: Tile(types[f"{ns}_{k}"]) for k, p in cells.items()})
    initial = [(row, 1), (Supertile.singleton(kt), 1)]
    exp = AllOf((JunkSizeLe(1, frozenset()), TraceOrder("dissolved-glues-off")))
    return GadgetBundle("dissolve-row", list(types.values()), initial, exp, TAU,
                        info={"row": [f"{ns}_T{i}" for i in range(n)], "trigger": kt.name})


@trace_check("dissolved-glues-off")
def _dissolved_off(run: RunResult, bundle: GadgetBundle) -> Outcome:
    """In terminal singletons every glue targeted by a completed off signal is off."""
    for sid in run.terminal_ids():
        st = run.state.registry[sid]
        for t in st.tiles.values():
            for si in t.completed:
                s = t.type.signals[si]
                if s.action is OFF and t.state_of(*s.target) is ON:
                    return Outcome(False, f"{t.name} {s.target[1]} still on")
    return Outcome(True)


# -- message following ----------------------------------------------------------------------------


def _is_path(path: Sequence[tuple]) -> bool:
    if len(set(path)) != len(path):
        return False
    return all(sum(abs(a - b) for a, b in zip(p, q)) == 1 for p, q in zip(path, path[1:]))


def _free_neighbor(p, used: set, avoid_dir=None):
    for f in FACES:
        q = add(p, f.vec)
        if q not in used:
            return q
    raise GadgetError("no free neighbor for a path end")


def build_message_follower(path: Sequence[tuple], ns: str = "mf") -> GadgetBundle:
    """Path tiles that pass ``g`` forward, then route ``br`` along the same exits.

    Each path tile owns ``g*`` on its entry face and latent ``g`` on every
    other face; the entry bond turns all of those ``g`` on, but only the one
    toward the successor bonds.  That bond records the exit side by turning
    on ``br_<exit>*`` on the entry face.  When ``br_<e>*`` bonds, the tile
    turns on every ``br_<d>`` on face ``e``, so ``br`` leaves on the side
    ``g`` left.  An INIT tile starts ``g`` and offers ``br``; an END tile
    absorbs both.
    """
    path = [tuple(p) for p in path]
    if not path or not _is_path(path):
        raise GadgetError("path must be a non-empty self-avoiding 6-connected sequence")
    used = set(path)
    init_cell = _free_neighbor(path[0], used)
    used.add(init_cell)
    end_cell = _free_neighbor(path[-1], used)
    chain = [init_cell] + path + [end_cell]
    names = ["INIT"] + [f"P{i}" for i in range(len(path))] + ["END"]
    cells = dict(zip(names, chain))
    b = {n: TileBuilder(f"{ns}_{n}") for n in names}
    g = f"{ns}_g"

    def br(f: Face) -> str:
        return f"{ns}_br_{FACE_NAMES[f]}"

    structural(b, {n: cells[n] for n in names[1:]}, list(zip(names[1:-1], names[2:])), ns)
    first_in = Face.from_vec(tuple(a - c for a, c in zip(init_cell, path[0])))
    start = f"{ns}_start"
    b["INIT"].glue(first_in.opposite, start, 2).glue(first_in.opposite, g, 1)
    for d in FACES:
        if d is not first_in:
            b["INIT"].glue(first_in.opposite, br(d), 1, LATENT)
            b["INIT"].signal((first_in.opposite, start), (first_in.opposite, br(d)), ON)
    b["P0"].glue(first_in, start + "*", 2)
    for i, p in enumerate(path):
        tb = b[f"P{i}"]
        prev = chain[i]
        entry = Face.from_vec(tuple(a - c for a, c in zip(prev, p)))
        tb.glue(entry, g + "*", 1)
        for e in FACES:
            if e is entry:
                continue
            tb.glue(entry, br(e) + "*", 1, LATENT)
            tb.glue(e, g, 1, LATENT)
            tb.signal((entry, g + "*"), (e, g), ON)
            tb.signal((e, g), (entry, br(e) + "*"), ON)
            for d in FACES:
                if d is not e.opposite:
                    tb.glue(e, br(d), 1, LATENT)
                    tb.signal((entry, br(e) + "*"), (e, br(d)), ON)
    last_exit = Face.from_vec(tuple(a - c for a, c in zip(end_cell, path[-1])))
    b["END"].glue(last_exit.opposite, g + "*", 1)
    for d in FACES:
        if d is not last_exit.opposite:
            b["END"].glue(last_exit.opposite, br(d) + "*", 1)
    types = {n: tb.build() for n, tb in b.items()}
    body = Supertile({cells[n]: Tile(types[n]) for n in names[1:]})
    initial = [(body, 1), (Supertile.singleton(types["INIT"]), 1)]
    exits = []
    for i, p in enumerate(path):
        exits.append(Face.from_vec(tuple(a - c for a, c in zip(chain[i + 2], p))))
    return GadgetBundle("message-follower", list(types.values()), initial, TraceOrder("message-follow"),
                        TAU, info={"ns": ns, "path": path, "exits": exits, "names": [types[n].name for n in names],
                                   "g": g, "br": br, "cells": cells})


def message_exit_sides(run: RunResult, bundle: GadgetBundle) -> list[tuple]:
    """Per path tile: (expected exit, g exit observed, br exit observed)."""
    info = bundle.info
    path_names = info["names"][1:-1]
    g = info["g"]
    out = []
    for sid in run.terminal_ids():
        st = run.state.registry[sid]
        names = {t.name: (p, t) for p, t in st.tiles.items()}
        if not all(n in names for n in path_names):
            continue
        bonded = st.bonded_glues()
        for k, n in enumerate(path_names):
            p, t = names[n]
            g_exit = {t.world_face(gi) for gi, spec in enumerate(t.type.glues)
                      if spec.label == g and (p, gi) in bonded}
            br_exit = {t.world_face(gi) for gi, spec in enumerate(t.type.glues)
                       if spec.label.startswith(f"{info['ns']}_br_") and not spec.label.endswith("*")
                       and t.states[gi] is ON}
            out.append((info["exits"][k], g_exit, br_exit, t.rot))
        return out
    return out


@trace_check("message-follow")
def _message_follow(run: RunResult, bundle: GadgetBundle) -> Outcome:
    sides = message_exit_sides(run, bundle)
    if len(sides) != len(bundle.info["path"]):
        return Outcome(False, "path assembly not found among terminal supertiles")
    for k, (want, g_exit, br_exit, rot) in enumerate(sides):
        want = rotate(rot, want)
        if g_exit != {want} or br_exit != {want}:
            return Outcome(False, f"tile {k}: expected {want.value}, g {sorted(f.value for f in g_exit)}, "
                                  f"br {sorted(f.value for f in br_exit)}")
    return Outcome(True)


def random_path(seed: int, length: int, planar: bool = False) -> list[tuple]:
    """Seeded self-avoiding walk (restarts on dead ends)."""
    import random

    rng = random.Random(seed)
    dirs = [f.vec for f in FACES if not planar or f.vec[2] == 0]
    while True:
        path = [(0, 0, 0)]
        while len(path) < length:
            opts = [add(path[-1], d) for d in dirs if add(path[-1], d) not in path]
            if not opts:
                break
            path.append(rng.choice(opts))
        if len(path) == length:
            return path


BUNDLES = {
    "diagonal": lambda: diagonal_detector(dissolve=False),
    "diagonal-dissolve": lambda: diagonal_detector(dissolve=True),
    "duple": lambda: build_detector("duple", [(Face.MY, 1), (Face.MY, 1)], ns="dup", detector_count=1, mode=STAM),
    "corner-2d": lambda: build_corner_gadget("2d"),
    "corner-3d": lambda: build_corner_gadget("3d"),
    "filler-l": lambda: build_filler_scenario(L_TROMINO),
    "filler-staircase": lambda: build_filler_scenario(STAIRCASE4),
    "filler-negative": lambda: build_filler_scenario(L_TROMINO, drop_input=True),
    "dissolve-row": lambda: build_dissolve_row(3),
    "message-turn": lambda: build_message_follower([(0, 0, 0), (0, 1, 0), (1, 1, 0), (2, 1, 0)]),
}
