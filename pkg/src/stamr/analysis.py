"""Assembly-level predicates, junk auditing and the bent-cavity witness pair."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .engine import RunResult, SystemState
from .formats import format_count, parse_count
from .geometry import (
    Shape,
    bent_cavities,
    congruent,
    enclosed_cavities,
    is_connected,
    neighborhood_class,
    normalize,
)
from .model import STAM, STAM_R, GlueState, Supertile, add, canonical_form, short_hash
from .rotation import FACES


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violation: str | None = None

    def __bool__(self) -> bool:
        return self.ok


# -- uniformly covered ---------------------------------------------------------------


def _exposed_faces(a: Supertile):
    for p in sorted(a.tiles):
        for f in FACES:
            if add(p, f.vec) not in a.tiles:
                yield p, f


def is_uniformly_covered(a: Supertile) -> Verdict:
    """Exposed faces share one on strength-1 glue; equal neighborhood classes share a tile type."""
    common = None
    for p, f in _exposed_faces(a):
        tile = a.tiles[p]
        here = {
            tile.type.glues[gi].label
            for gi in tile.glues_on_face(f)
            if tile.states[gi] is GlueState.ON and tile.type.glues[gi].strength == 1
        }
        common = here if common is None else common & here
        if not common:
            return Verdict(False, f"exposed face {f.value} of {tile.name} at {p} lacks the common on strength-1 glue")
    if len(a) < 2:
        return Verdict(True)
    pts = frozenset(a.tiles)
    by_class: dict[str, tuple] = {}
    for p in sorted(pts):
        cls = neighborhood_class(pts, p)
        name = a.tiles[p].name
        if cls in by_class and by_class[cls][1] != name:
            q, other = by_class[cls]
            return Verdict(False, f"class {cls}: {other} at {q} but {name} at {p}")
        by_class.setdefault(cls, (p, name))
    return Verdict(True)


# -- deconstructable -------------------------------------------------------------------


def is_deconstructable(a: Supertile, tau: int = 2) -> Verdict:
    """Neighbors bind with total strength >= tau and every bonded glue has a direct off signal."""
    weights = a.edge_weights()
    for p in sorted(a.tiles):
        for f in FACES:
            q = add(p, f.vec)
            if q in a.tiles and p < q:
                w = weights.get((p, q), weights.get((q, p), 0))
                if w < tau:
                    return Verdict(False, f"tiles at {p} and {q} bound with strength {w} < {tau}")
    for p, gi in sorted(a.bonded_glues()):
        tile = a.tiles[p]
        if not any(
            tile.type.signal_target(si) == gi and s.action is GlueState.OFF
            for si, s in enumerate(tile.type.signals)
        ):
            g = tile.type.glues[gi]
            return Verdict(False, f"bonded glue {g.label} on {g.face.value} of {tile.name} at {p} has no off signal")
    return Verdict(True)


# -- junk audit ------------------------------------------------------------------------

TARGET, JUNK, OVERSIZE = "target", "junk", "oversize"


@dataclass(frozen=True)
class AuditEntry:
    cls: str
    size: int
    count: float
    hash: str

    def line(self) -> str:
        return f"{self.cls} {self.size} {format_count(self.count)} {self.hash}"


@dataclass
class JunkReport:
    bound: int
    entries: list = field(default_factory=list)

    def of(self, cls: str) -> list[AuditEntry]:
        return [e for e in self.entries if e.cls == cls]

    @property
    def targets(self) -> list[AuditEntry]:
        return self.of(TARGET)

    @property
    def junk(self) -> list[AuditEntry]:
        return self.of(JUNK)

    @property
    def oversize(self) -> list[AuditEntry]:
        return self.of(OVERSIZE)

    @property
    def ok(self) -> bool:
        return not self.oversize

    def text(self) -> str:
        return f"bound {self.bound}\n" + "".join(e.line() + "\n" for e in self.entries)

    @classmethod
    def parse(cls, text: str) -> "JunkReport":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("bound "):
            raise ValueError("report must start with 'bound <n>'")
        rep = cls(int(lines[0].split()[1]))
        for i, ln in enumerate(lines[1:], 2):
            parts = ln.split()
            if len(parts) != 4 or parts[0] not in (TARGET, JUNK, OVERSIZE):
                raise ValueError(f"line {i}: expected '<class> <size> <count> <hash>'")
            rep.entries.append(AuditEntry(parts[0], int(parts[1]), parse_count(parts[2]), parts[3]))
        return rep


def _is_target(st: Supertile, key, targets, mode: str) -> bool:
    for t in targets:
        if isinstance(t, Supertile):
            if canonical_form(t, mode) == key:
                return True
        else:
            pts = frozenset(st.tiles)
            if mode == STAM and normalize(pts) == normalize(t):
                return True
            if mode == STAM_R and congruent(pts, t):
                return True
    return False


def junk_audit(terminals, targets: Iterable = (), bound: int = 4, mode: str = STAM_R) -> JunkReport:
    """Classify terminal assemblies as target, junk (size <= bound) or oversize.

    ``terminals`` is a mapping or iterable of ``(supertile, count)``; plain
    supertiles count once.  Assemblies equal up to the mode's symmetry merge.
    """
    items = terminals.items() if isinstance(terminals, Mapping) else terminals
    targets = list(targets)
    merged: dict = {}
    for item in items:
        st, n = (item, 1) if isinstance(item, Supertile) else item
        key = canonical_form(st, mode)
        if key in merged:
            merged[key][1] += n
        else:
            merged[key] = [st, n]
    rep = JunkReport(bound)
    for key, (st, n) in merged.items():
        if _is_target(st, key, targets, mode):
            cls = TARGET
        elif len(st) <= bound:
            cls = JUNK
        else:
            cls = OVERSIZE
        rep.entries.append(AuditEntry(cls, len(st), n, short_hash(key)))
    order = {TARGET: 0, JUNK: 1, OVERSIZE: 2}
    rep.entries.sort(key=lambda e: (order[e.cls], e.size, e.hash))
    return rep


def terminal_population(run: RunResult) -> list[tuple[Supertile, float]]:
    """Terminal supertiles of a finished run with their counts."""
    state: SystemState = run.state
    return [(state.registry[s], state.counts[s]) for s in sorted(run.terminal_ids())]


def audit_run(run: RunResult, targets: Iterable = (), bound: int = 4) -> JunkReport:
    return junk_audit(terminal_population(run), targets, bound, run.state.mode)


# -- bent-cavity witness pair -------------------------------------------------------------

WITNESS_BOX = (5, 5, 4)
WITNESS_SHAFT = ((1, 4, 1), (1, 3, 1), (1, 2, 1))
WITNESS_TURNS = ((2, 2, 1), (1, 2, 2))


def witness_shapes() -> tuple[Shape, Shape]:
    """Two 5x5x4 blocks, each hollowed by a bent shaft; the shafts turn differently."""
    X, Y, Z = WITNESS_BOX
    box = {(x, y, z) for x in range(X) for y in range(Y) for z in range(Z)}
    out = []
    for turn in WITNESS_TURNS:
        s = frozenset(box - set(WITNESS_SHAFT) - {turn})
        assert is_connected(s)
        assert len(bent_cavities(s)) == 1
        assert not enclosed_cavities(s)
        out.append(s)
    assert not congruent(out[0], out[1])
    return out[0], out[1]


@dataclass(frozen=True)
class WitnessReport:
    sizes: tuple[int, int]
    bent: tuple[bool, bool]
    enclosed: tuple[bool, bool]
    congruent: bool

    @property
    def ok(self) -> bool:
        return all(self.bent) and not any(self.enclosed) and not self.congruent

    def text(self) -> str:
        yn = lambda b: "yes" if b else "no"  # noqa: E731
        return (
            f"sizes {self.sizes[0]}/{self.sizes[1]}\n"
            f"bent={yn(self.bent[0])}/{yn(self.bent[1])}\n"
            f"enclosed={yn(self.enclosed[0])}/{yn(self.enclosed[1])}\n"
            f"congruent={yn(self.congruent)}\n"
        )


def check_witness(s1: Shape, s2: Shape) -> WitnessReport:
    return WitnessReport(
        (len(s1), len(s2)),
        (bool(bent_cavities(s1)), bool(bent_cavities(s2))),
        (bool(enclosed_cavities(s1)), bool(enclosed_cavities(s2))),
        congruent(s1, s2),
    )


__all__ = [
    "AuditEntry",
    "JunkReport",
    "Verdict",
    "WitnessReport",
    "audit_run",
    "check_witness",
    "is_deconstructable",
    "is_uniformly_covered",
    "junk_audit",
    "terminal_population",
    "witness_shapes",
]
