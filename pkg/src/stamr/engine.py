"""Step semantics, a seeded random scheduler and an exhaustive explorer.

Scheduler contract: at every step the enabled action kinds are listed in the
fixed order ``combine, bond, signal``; one kind is drawn uniformly, then one
action of that kind is drawn uniformly from a deterministically ordered list.
Unstable supertiles are split immediately (minimum cuts in random runs, every
sub-threshold cut in the explorer), and each split is written to the trace.
"""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .model import (
    MODES,
    STAM_R,
    Bond,
    GlueState,
    Point,
    Supertile,
    Tile,
    TileType,
    add,
    auto_bond,
    bond_candidates_within,
    canonical,
    complement_label,
    cut_weight,
    form_bond,
    formable_bonds,
    merge,
    min_cut,
    pending_signals,
    place,
    process_signal,
    short_hash,
    split,
    sub,
)
from .geometry import congruent
from .rotation import IDENTITY, N_ROTATIONS, rotate, rotate_vec

BOND_POLICIES = ("all", "random_subset")
DIFFUSION = ("placement_only", "path_bfs")
KINDS = ("combine", "bond", "signal")


def species_id(st: Supertile, mode: str) -> str:
    return short_hash(canonical(st, mode)[0])


# -- actions ----------------------------------------------------------------------


@dataclass(frozen=True)
class Combine:
    a: str
    b: str
    rot: int
    offset: Point
    candidates: tuple

    kind = "combine"


@dataclass(frozen=True)
class BondWithin:
    s: str
    bond: Bond

    kind = "bond"


@dataclass(frozen=True)
class ProcessSignal:
    s: str
    point: Point
    signal: int

    kind = "signal"


@dataclass(frozen=True)
class Split:
    s: str
    side: frozenset

    kind = "split"


@dataclass
class Event:
    """One trace entry.  ``after`` is the supertile produced before any split."""

    step: int
    action: object
    consumed: tuple = ()
    produced: tuple = ()
    after: Supertile | None = None
    tile_before: Tile | None = None
    tile_after: Tile | None = None
    changed: bool = False

    def line(self, state: "SystemState") -> str:
        a = self.action
        prod = " ".join(self.produced)
        if isinstance(a, Combine):
            return (
                f"{self.step} combine {a.a} {a.b} rot {a.rot} at {_pt(a.offset)} "
                f"bonds {len(self.after.bonds) - _nbonds(state, a)} -> {prod}"
            )
        if isinstance(a, BondWithin):
            (p, gi), (q, gj) = a.bond
            return f"{self.step} bond {a.s} {_pt(p)}:{gi} {_pt(q)}:{gj} -> {prod}"
        if isinstance(a, ProcessSignal):
            s = self.tile_before.type.signals[a.signal]
            return (
                f"{self.step} signal {a.s} {_pt(a.point)} {self.tile_before.name} "
                f"{s.source[0].value}:{s.source[1]}->{s.target[0].value}:{s.target[1]}:{s.action.value} "
                f"{'changed' if self.changed else 'noop'} -> {prod}"
            )
        return f"{self.step} split {a.s} side {len(a.side)} -> {prod}"


def _pt(p) -> str:
    return ",".join(map(str, p))


def _nbonds(state: "SystemState", a: Combine) -> int:
    return len(state.registry[a.a].bonds) + len(state.registry[a.b].bonds)


# -- system state -----------------------------------------------------------------


class SystemState:
    """Multiset of canonical supertiles with counts (``math.inf`` allowed)."""

    def __init__(self, tau: int = 2, mode: str = STAM_R):
        if tau < 1:
            raise ValueError("tau must be positive")
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode}")
        self.tau = tau
        self.mode = mode
        self.counts: dict[str, float] = {}
        self.registry: dict[str, Supertile] = {}

    def copy(self) -> "SystemState":
        s = SystemState(self.tau, self.mode)
        s.counts = dict(self.counts)
        s.registry = self.registry  # content-addressed, append-only
        return s

    def intern(self, st: Supertile) -> str:
        key, placed = canonical(st, self.mode)
        sid = short_hash(key)
        self.registry.setdefault(sid, placed)
        return sid

    def add(self, st: Supertile, n=1) -> str:
        sid = self.intern(st)
        if n:
            self.counts[sid] = self.counts.get(sid, 0) + n
        return sid

    def remove(self, sid: str, n: int = 1) -> None:
        c = self.counts.get(sid, 0)
        if c < n:
            raise ValueError(f"stale action: {sid} has count {c}")
        if c != math.inf:
            c -= n
            if c:
                self.counts[sid] = c
            else:
                del self.counts[sid]

    def present(self) -> list[str]:
        return sorted(self.counts)

    def supertiles(self) -> list[tuple[Supertile, float]]:
        return [(self.registry[s], self.counts[s]) for s in self.present()]

    def finite_tile_total(self) -> int:
        return sum(len(self.registry[s]) * c for s, c in self.counts.items() if c != math.inf)

    @classmethod
    def from_supertiles(cls, items: Iterable[tuple[Supertile, float]], tau=2, mode=STAM_R):
        state = cls(tau, mode)
        for st, n in items:
            for piece in stabilize(auto_bond(st), tau):
                state.add(piece, n)
        return state


def singleton_counts(types: Iterable[TileType], count=math.inf) -> list[tuple[Supertile, float]]:
    return [(Supertile.singleton(t), count) for t in types]


def state_from_scenario(sc, types: dict[str, TileType]) -> SystemState:
    """Build a system from a parsed scenario.

    With no ``count`` and no ``count-assembly`` lines, every tile type gets an
    infinite pool.
    """
    items = []
    counts = sc.tile_counts
    if not counts and not sc.assembly_counts:
        counts = {name: math.inf for name in types}
    for name, c in counts.items():
        if c:
            items.append((Supertile.singleton(types[name]), c))
    for name, cells in sc.assemblies.items():
        c = sc.assembly_counts.get(name, 1)
        if c:
            st = Supertile({p: Tile(types[t], rot) for p, t, rot in cells})
            items.append((st, c))
    return SystemState.from_supertiles(items, sc.tau, sc.mode)


# -- stability ----------------------------------------------------------------------


def stabilize(st: Supertile, tau: int, record: list | None = None) -> list[Supertile]:
    """Split ``st`` along minimum cuts until every piece is tau-stable."""
    out = []
    stack = [st]
    while stack:
        cur = stack.pop()
        w, side = min_cut(cur)
        if w >= tau:
            out.append(cur)
            continue
        a, b = split(cur, side)
        if record is not None:
            record.append((cur, frozenset(side), a, b))
        stack.extend((b, a))
    return out


def _connected_subsets(st: Supertile) -> Iterable[frozenset]:
    pts = sorted(st.tiles)
    idx = {p: i for i, p in enumerate(pts)}
    adj = [0] * len(pts)
    for p, q in st.edge_weights():
        adj[idx[p]] |= 1 << idx[q]
        adj[idx[q]] |= 1 << idx[p]
    full = (1 << len(pts)) - 1
    for mask in range(1, full):
        low = mask & -mask
        seen = low
        frontier = low
        while frontier:
            nxt = 0
            m = frontier
            while m:
                bit = m & -m
                nxt |= adj[bit.bit_length() - 1]
                m ^= bit
            nxt &= mask & ~seen
            seen |= nxt
            frontier = nxt
        if seen == mask:
            yield frozenset(pts[i] for i in range(len(pts)) if mask >> i & 1)


def unstable_cuts(st: Supertile, tau: int) -> list[frozenset]:
    """Every bond-connected side S with cut weight below tau (each split once)."""
    pts = sorted(st.tiles)
    out, seen = [], set()
    for side in _connected_subsets(st):
        if cut_weight(st, side) >= tau:
            continue
        key = side if pts[0] in side else frozenset(pts) - side
        if key not in seen:
            seen.add(key)
            out.append(side)
    return out


def split_unstable(state: SystemState, sid: str, rng: random.Random | None = None,
                   mode: str = "min_cut"):
    """Split species ``sid`` (must be unstable).

    ``min_cut`` returns a new state with one instance replaced by stable
    pieces.  ``exhaustive`` returns the list of all possible piece sets.
    """
    st = state.registry[sid]
    if min_cut(st)[0] >= state.tau:
        raise ValueError("supertile is tau-stable")
    if mode == "exhaustive":
        return [exhaustive_split(split(st, side), state.tau) for side in unstable_cuts(st, state.tau)]
    new = state.copy()
    new.remove(sid)
    for piece in stabilize(st, state.tau):
        new.add(piece)
    return new


def exhaustive_split(parts: Sequence[Supertile], tau: int) -> list[Supertile]:
    """Every stable piece reachable by repeatedly splitting ``parts``."""
    out = []
    for p in parts:
        if min_cut(p)[0] >= tau:
            out.append(p)
            continue
        for side in unstable_cuts(p, tau):
            out.extend(exhaustive_split(split(p, side), tau))
    return out


# -- combinations ------------------------------------------------------------------


_COMBO_CACHE: dict = {}


def _bonded(st: Supertile) -> set:
    return st.bonded_glues()


def placements(a: Supertile, b: Supertile, tau: int, mode: str = STAM_R):
    """Distinct products of combining canonical ``a`` with ``b``.

    Returns ``[(rot, offset, candidates, total, product)]``, one per canonical
    product, for placements that abut, do not overlap and reach ``tau``.
    """
    rots = range(N_ROTATIONS) if mode == STAM_R else (IDENTITY,)
    a_bonded, b_bonded = _bonded(a), _bonded(b)
    b_glues = []
    for pb, tb in b.tiles.items():
        for gj, spec in enumerate(tb.type.glues):
            if tb.states[gj] is GlueState.ON and (pb, gj) not in b_bonded:
                b_glues.append((spec.label, pb, tb.world_face(gj)))
    tried = set()
    seen = {}
    for pa, ta in sorted(a.tiles.items(), key=lambda kv: kv[0]):
        for gi, spec in enumerate(ta.type.glues):
            if ta.states[gi] is not GlueState.ON or (pa, gi) in a_bonded:
                continue
            f = ta.world_face(gi)
            cell = add(pa, f.vec)
            if cell in a.tiles:
                continue
            want = complement_label(spec.label)
            for label, pb, fb in b_glues:
                if label != want:
                    continue
                for r in rots:
                    if rotate(r, fb) is not f.opposite:
                        continue
                    t = sub(cell, rotate_vec(r, pb))
                    if (r, t) in tried:
                        continue
                    tried.add((r, t))
                    res = formable_bonds(a, b, r, t)
                    if res is None or res[1] < tau:
                        continue
                    cands, total = res
                    prod = merge(a, place(b, r, t), cands)
                    key = canonical(prod, mode)[0]
                    if key not in seen:
                        seen[key] = (r, t, tuple(cands), total, prod)
    return [seen[k] for k in sorted(seen, key=short_hash)]


def _cached_placements(state: SystemState, ida: str, idb: str):
    key = (state.registry[ida].fingerprint(), state.registry[idb].fingerprint(), state.tau, state.mode)
    hit = _COMBO_CACHE.get(key)
    if hit is None:
        if len(_COMBO_CACHE) > 500_000:
            _COMBO_CACHE.clear()
        hit = [
            (r, t, c) for r, t, c, _, _ in
            placements(state.registry[ida], state.registry[idb], state.tau, state.mode)
        ]
        _COMBO_CACHE[key] = hit
    return hit


def enumerate_combinations(state: SystemState, size_bound: int | None = None) -> list[Combine]:
    ids = state.present()
    out = []
    for i, a in enumerate(ids):
        for b in ids[i:]:
            if a == b and state.counts[a] < 2:
                continue
            if size_bound is not None and len(state.registry[a]) + len(state.registry[b]) > size_bound:
                continue
            out.extend(Combine(a, b, r, t, c) for r, t, c in _cached_placements(state, a, b))
    return out


def path_clear(a: Supertile, b: Supertile, r: int, t: Point, arena: int) -> bool:
    """Translation-only BFS: can rotated ``b`` slide from outside the arena to ``t``?"""
    bp = [rotate_vec(r, p) for p in b.tiles]
    occ = a.points
    lo = [min(p[i] for p in occ) - arena for i in range(3)]
    hi = [max(p[i] for p in occ) + arena for i in range(3)]

    def free(off):
        return all(add(p, off) not in occ for p in bp)

    def outside(off):
        for i in range(3):
            vals = [p[i] + off[i] for p in bp]
            if max(vals) < lo[i] + arena or min(vals) > hi[i] - arena:
                return True
        return False

    if not free(t):
        return False
    seen = {t}
    queue = deque([t])
    while queue:
        off = queue.popleft()
        if outside(off):
            return True
        for d in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            n = add(off, d)
            if n in seen or not all(lo[i] - 2 * len(bp) <= n[i] <= hi[i] + 2 * len(bp) for i in range(3)):
                continue
            seen.add(n)
            if free(n):
                queue.append(n)
    return False


def enabled_actions(state: SystemState, config: "RunConfig | None" = None) -> dict[str, list]:
    out = {}
    combos = enumerate_combinations(state)
    if config is not None and config.diffusion_check == "path_bfs":
        combos = [
            c for c in combos
            if path_clear(state.registry[c.a], state.registry[c.b], c.rot, c.offset, config.arena_bound)
        ]
    if combos:
        out["combine"] = combos
    bonds, sigs = [], []
    for sid in state.present():
        st = state.registry[sid]
        bonds.extend(BondWithin(sid, b) for b in bond_candidates_within(st))
        sigs.extend(ProcessSignal(sid, p, si) for p, si in pending_signals(st))
    if bonds:
        out["bond"] = bonds
    if sigs:
        out["signal"] = sigs
    return out


def _subsets_reaching(cands: Sequence[Bond], strengths: Sequence[int], tau: int) -> list[tuple]:
    out = []
    for k in range(1, len(cands) + 1):
        for idx in combinations(range(len(cands)), k):
            if sum(strengths[i] for i in idx) >= tau:
                out.append(tuple(cands[i] for i in idx))
    return out


def _strength(st: Supertile, end) -> int:
    p, gi = end
    return st.tiles[p].type.glues[gi].strength


def apply_combination(state: SystemState, action: Combine, rng: random.Random | None = None,
                      bond_policy: str = "all", step: int = 0):
    """Apply ``action``; returns ``(new state, events)``."""
    if state.counts.get(action.a, 0) < 1 or state.counts.get(action.b, 0) < 1:
        raise ValueError("stale action")
    if action.a == action.b and state.counts[action.a] < 2:
        raise ValueError("stale action")
    a = state.registry[action.a]
    bp = place(state.registry[action.b], action.rot, action.offset)
    bonds = list(action.candidates)
    if bond_policy == "random_subset":
        both = merge(a, bp, ())
        strengths = [_strength(both, e) for e, _ in bonds]
        bonds = list((rng or random.Random(0)).choice(_subsets_reaching(bonds, strengths, state.tau)))
    elif bond_policy != "all":
        raise ValueError(f"unknown bond policy {bond_policy}")
    prod = merge(a, bp, bonds)
    new = state.copy()
    new.remove(action.a)
    new.remove(action.b)
    ev = Event(step, action, (action.a, action.b), after=prod)
    return _store(new, prod, ev)


def _store(state: SystemState, st: Supertile, ev: Event):
    record = []
    pieces = stabilize(st, state.tau, record)
    ev.produced = tuple(state.add(p) for p in pieces)
    events = [ev]
    for whole, side, pa, pb in record:
        sid = state.intern(whole)
        events.append(
            Event(ev.step, Split(sid, side), (sid,), (state.intern(pa), state.intern(pb)), after=whole)
        )
    return state, events


def apply_bond(state: SystemState, action: BondWithin, step: int = 0):
    if state.counts.get(action.s, 0) < 1:
        raise ValueError("stale action")
    st = form_bond(state.registry[action.s], action.bond)
    new = state.copy()
    new.remove(action.s)
    return _store(new, st, Event(step, action, (action.s,), after=st))


def process_pending_signal(state: SystemState, action: ProcessSignal, step: int = 0):
    if state.counts.get(action.s, 0) < 1:
        raise ValueError("stale action")
    st = state.registry[action.s]
    before = st.tiles[action.point]
    out, changed = process_signal(st, action.point, action.signal)
    new = state.copy()
    new.remove(action.s)
    ev = Event(step, action, (action.s,), after=out, tile_before=before,
               tile_after=out.tiles[action.point], changed=changed)
    return _store(new, out, ev)


def apply_action(state, action, rng=None, bond_policy="all", step=0):
    if isinstance(action, Combine):
        return apply_combination(state, action, rng, bond_policy, step)
    if isinstance(action, BondWithin):
        return apply_bond(state, action, step)
    if isinstance(action, ProcessSignal):
        return process_pending_signal(state, action, step)
    raise TypeError(f"not a schedulable action: {action!r}")


# -- random runs ------------------------------------------------------------------------


@dataclass
class RunConfig:
    seed: int = 0
    max_steps: int = 10_000
    bond_policy: str = "all"
    diffusion_check: str = "placement_only"
    arena_bound: int = 4
    finite_count_c: int | None = None

    def __post_init__(self):
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")
        if self.bond_policy not in BOND_POLICIES:
            raise ValueError(f"bond_policy must be one of {BOND_POLICIES}")
        if self.diffusion_check not in DIFFUSION:
            raise ValueError(f"diffusion_check must be one of {DIFFUSION}")


@dataclass
class RunResult:
    trace: list
    state: SystemState
    terminal: dict
    steps: int
    quiescent: bool
    seen: set = field(default_factory=set)

    def lines(self) -> list[str]:
        return [ev.line(self.state) for ev in self.trace]

    def terminal_ids(self) -> set[str]:
        return {s for s, t in self.terminal.items() if t}


def terminal_flags(state: SystemState, config: RunConfig | None = None) -> dict[str, bool]:
    acts = enabled_actions(state, config)
    busy = set()
    for a in acts.get("combine", []):
        busy.update((a.a, a.b))
    for a in acts.get("bond", []) + acts.get("signal", []):
        busy.add(a.s)
    return {s: s not in busy for s in state.present()}


def run_random(state: SystemState, config: RunConfig) -> RunResult:
    """Seeded run to quiescence or ``max_steps``."""
    rng = random.Random(config.seed)
    if config.finite_count_c is not None:
        state = state.copy()
        state.counts = {s: config.finite_count_c for s in state.counts}
    trace = []
    seen = set(state.present())
    quiescent = False
    steps = 0
    while steps < config.max_steps:
        acts = enabled_actions(state, config)
        if not acts:
            quiescent = True
            break
        kind = rng.choice([k for k in KINDS if k in acts])
        action = rng.choice(acts[kind])
        state, events = apply_action(state, action, rng, config.bond_policy, steps)
        trace.extend(events)
        for ev in events:
            seen.update(ev.produced)
        steps += 1
    else:
        quiescent = not enabled_actions(state, config)
    return RunResult(trace, state, terminal_flags(state, config), steps, quiescent, seen)


# -- exhaustive exploration ---------------------------------------------------------------


@dataclass
class Producibles:
    species: dict
    terminal: set
    frontier: set
    mode: str

    @property
    def complete(self) -> bool:
        return not self.frontier


def enumerate_producibles(initial: Iterable[Supertile], tau: int = 2, size_bound: int = 8,
                          mode: str = STAM_R) -> Producibles:
    """Closure of ``initial`` under every step kind with unbounded counts.

    Branches over every bond subset reaching tau, every pending signal and
    every sub-threshold cut.  Supertiles larger than ``size_bound`` are kept
    as frontier and not expanded; a non-empty frontier makes the result a
    lower bound.
    """
    species: dict[str, Supertile] = {}
    frontier: set[str] = set()
    queue: deque[str] = deque()
    done: list[str] = []

    def push(st: Supertile):
        for piece in exhaustive_split([st], tau):
            key, placed = canonical(piece, mode)
            sid = short_hash(key)
            if sid in species:
                continue
            species[sid] = placed
            if len(placed) > size_bound:
                frontier.add(sid)
            else:
                queue.append(sid)

    for st in initial:
        push(auto_bond(st))
    while queue:
        sid = queue.popleft()
        st = species[sid]
        done.append(sid)
        for other in done:
            o = species[other]
            for r, t, cands, _, _ in placements(st, o, tau, mode):
                bp = place(o, r, t)
                both = merge(st, bp, ())
                strengths = [_strength(both, e) for e, _ in cands]
                for subset in _subsets_reaching(cands, strengths, tau):
                    push(merge(st, bp, subset))
        for bond in bond_candidates_within(st):
            push(form_bond(st, bond))
        for p, si in pending_signals(st):
            push(process_signal(st, p, si)[0])
    terminal = set()
    everything = list(species)
    for sid in species:
        if sid in frontier:
            continue
        st = species[sid]
        if bond_candidates_within(st) or pending_signals(st):
            continue
        if any(placements(st, species[o], tau, mode) for o in everything):
            continue
        terminal.add(sid)
    return Producibles(species, terminal, frontier, mode)


# -- finite-count probe -------------------------------------------------------------------


@dataclass
class ProbeReport:
    c: int
    trials: int
    successes: list
    note: str = "heuristic probe over seeded runs; not a proof of finite completion"

    @property
    def rate(self) -> float:
        return sum(self.successes) / self.trials if self.trials else 1.0

    def text(self) -> str:
        return f"c={self.c} success={sum(self.successes)}/{self.trials} ({self.note})"


def _matches(target, st: Supertile, mode: str) -> bool:
    if isinstance(target, Supertile):
        return canonical(target, mode)[0] == canonical(st, mode)[0]
    return congruent(frozenset(target), st.points)


def finitely_completes_probe(initial: Sequence[Supertile], targets: Sequence, c: int,
                             trials: int, seed: int, tau: int = 2, mode: str = STAM_R,
                             max_steps: int = 10_000) -> ProbeReport:
    """Run ``trials`` seeded runs with every initial element at count ``c``.

    A trial succeeds when every target was present at some point of the run.
    """
    seeds = random.Random(seed)
    base = SystemState.from_supertiles(((st, c) for st in initial), tau, mode)
    ok = []
    for _ in range(trials):
        if not targets:
            ok.append(True)
            continue
        res = run_random(base, RunConfig(seed=seeds.getrandbits(64), max_steps=max_steps))
        seen = [res.state.registry[s] for s in res.seen]
        ok.append(all(any(_matches(t, st, mode) for st in seen) for t in targets))
    return ProbeReport(c, trials, ok)
