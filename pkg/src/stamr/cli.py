"""Command-line front end.  Exit codes: 0 success, 1 domain failure, 2 usage or parse error."""
from __future__ import annotations

import argparse
import sys
from collections import Counter
from pathlib import Path

from .analysis import audit_run, check_witness, junk_audit, terminal_population, witness_shapes
from .codec import (
    SCAFFOLDS,
    EncodingError,
    canonical_encoding,
    check_schedule_connectivity,
    decode,
    enumerate_encodings,
    parse_encoding,
    serialize_encoding,
)
from .engine import BOND_POLICIES, DIFFUSION, RunConfig, enumerate_producibles, run_random, state_from_scenario
from .formats import FormatError, format_count, parse_scenario, parse_tileset
from .gadgets import BUNDLES, GadgetError, input_names, run_scenario
from .geometry import (
    ShapeError,
    bent_cavities,
    congruent,
    dump_voxels,
    enclosed_cavities,
    min_bbox,
    neighborhood_class,
    parse_shape,
    random_corpus,
    serialize_shape,
)
from .model import MODES, TilesetError

BOND_FLAGS = {"all": "all", "random": "random_subset"}
DIFFUSION_FLAGS = {"placement": "placement_only", "path": "path_bfs"}
assert set(BOND_FLAGS.values()) <= set(BOND_POLICIES) and set(DIFFUSION_FLAGS.values()) <= set(DIFFUSION)


class UsageError(Exception):
    """Bad input file or flag combination (exit 2)."""


class DomainFailure(Exception):
    """The command ran but its check failed (exit 1)."""

    def __init__(self, reason: str, lines=()):
        super().__init__(reason)
        self.lines = list(lines)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(2)


# -- helpers -------------------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _shape(path: str):
    try:
        return parse_shape(_read(path))
    except ShapeError as e:
        raise UsageError(f"{path}: {e}") from None


def _encoding(path: str):
    try:
        return parse_encoding(_read(path))
    except EncodingError as e:
        raise UsageError(f"{path}: {e}") from None


def _system(args):
    try:
        types = parse_tileset(_read(args.tileset))
        sc = parse_scenario(_read(args.scenario), types)
    except (FormatError, TilesetError) as e:
        raise UsageError(str(e)) from None
    if args.tau is not None:
        sc.tau = args.tau
    if args.mode is not None:
        sc.mode = args.mode
    return types, sc


def _config(args) -> RunConfig:
    return RunConfig(
        seed=args.seed,
        max_steps=args.steps,
        bond_policy=BOND_FLAGS[args.bond_policy],
        diffusion_check=DIFFUSION_FLAGS[args.diffusion],
        arena_bound=args.arena,
    )


def _species_lines(state, terminal: dict, dump: bool) -> list[str]:
    out = []
    for sid in state.present():
        st = state.registry[sid]
        flag = "yes" if terminal.get(sid) else "no"
        out.append(f"species {sid} size {len(st)} count {format_count(state.counts[sid])} terminal {flag}")
        if dump:
            out.append(dump_voxels(st.tiles).rstrip("\n"))
    return out


# -- commands ------------------------------------------------------------------------------


def cmd_analyze(args) -> list[str]:
    s = _shape(args.shape)
    box = min_bbox(s)
    classes = Counter(neighborhood_class(s, p) for p in s) if len(s) > 1 else Counter()
    out = [
        f"size {len(s)}",
        "bbox {} {} {}".format(*box.dims),
        "neighborhoods " + (" ".join(f"{k}:{v}" for k, v in sorted(classes.items())) or "-"),
        f"enclosed-cavities {len(enclosed_cavities(s))}",
    ]
    bent = bent_cavities(s)
    out.append(f"bent-cavities {len(bent)}")
    for c in bent:
        out.append(f"  cavity size {len(c.cells)} visible {len(c.visible)} hidden {len(c.hidden)}")
    out.append(f"encodings {len(enumerate_encodings(s))}")
    if args.dump_voxels:
        out.append(dump_voxels(s).rstrip("\n"))
    return out


def cmd_encode(args) -> list[str]:
    s = _shape(args.shape)
    if not args.all:
        return serialize_encoding(canonical_encoding(s)).splitlines()
    encs = sorted(enumerate_encodings(s), key=lambda e: e.text_key())
    out = [f"# encodings {len(encs)}"]
    for i, e in enumerate(encs, 1):
        out.append(f"# encoding {i}")
        out.extend(serialize_encoding(e).splitlines())
    return out


def cmd_decode(args) -> list[str]:
    e = _encoding(args.enc)
    try:
        s = decode(e)
    except EncodingError as err:
        raise DomainFailure(str(err)) from None
    out = serialize_shape(s).splitlines()
    if args.dump_voxels:
        out += ["# " + ln for ln in dump_voxels(s).splitlines()]
    return out


def cmd_roundtrip(args) -> list[str]:
    corpus = random_corpus(args.seed, args.count, args.bbox)
    ok, bad = 0, []
    for i, s in enumerate(corpus):
        if all(congruent(decode(e), s) for e in enumerate_encodings(s)):
            ok += 1
        else:
            bad.append(i)
    out = [f"# roundtrip seed {args.seed} count {args.count} bbox {args.bbox}"]
    out += [f"mismatch shape {i}" for i in bad]
    out.append(f"{ok}/{len(corpus)} {'OK' if not bad else 'FAIL'}")
    if bad:
        raise DomainFailure(f"{len(bad)} shapes failed the round trip", out)
    return out


def cmd_schedule_check(args) -> list[str]:
    if args.enc:
        items = [("enc", _encoding(args.enc))]
    elif args.shape:
        items = [(f"frame{i}", e) for i, e in enumerate(sorted(enumerate_encodings(_shape(args.shape)), key=lambda e: e.text_key()))]
    else:
        if args.seed is None:
            raise UsageError("schedule-check over a random corpus needs --seed")
        items = []
        for k, s in enumerate(random_corpus(args.seed, args.count, args.bbox)):
            items += [(f"shape{k}", e) for e in sorted(enumerate_encodings(s), key=lambda e: e.text_key())]
    out = []
    if args.seed is not None and not (args.enc or args.shape):
        out.append(f"# schedule-check seed {args.seed} count {args.count} bbox {args.bbox} scaffold {args.scaffold}")
    total_v = removes = 0
    for name, e in items:
        rep = check_schedule_connectivity(e, args.scaffold)
        removes += rep.removes
        total_v += len(rep.violations)
        for v in rep.violations:
            out.append(f"violation {name} step {v.step} removed {v.removed} detached {len(v.detached)}")
    out.append(f"encodings {len(items)} removes {removes} violations {total_v}")
    if total_v:
        raise DomainFailure(f"{total_v} connectivity violations", out)
    return out


def cmd_simulate(args) -> list[str]:
    if args.seed is None:
        raise UsageError("simulate needs --seed")
    types, sc = _system(args)
    state = state_from_scenario(sc, types)
    run = run_random(state, _config(args))
    out = [f"# simulate seed {args.seed} tau {sc.tau} mode {sc.mode} steps {args.steps}"]
    if not args.quiet:
        out += run.lines()
    out.append(f"steps {run.steps} quiescent {'yes' if run.quiescent else 'no'}")
    out += _species_lines(run.state, run.terminal, args.dump_voxels)
    return out


def cmd_enumerate(args) -> list[str]:
    types, sc = _system(args)
    state = state_from_scenario(sc, types)
    prod = enumerate_producibles([state.registry[s] for s in state.present()], sc.tau, args.max_size, sc.mode)
    out = [f"# enumerate tau {sc.tau} mode {sc.mode} max-size {args.max_size}"]
    for sid in sorted(prod.species):
        st = prod.species[sid]
        flag = "yes" if sid in prod.terminal else "no"
        out.append(f"species {sid} size {len(st)} terminal {flag}")
        if args.dump_voxels:
            out.append(dump_voxels(st.tiles).rstrip("\n"))
    out.append(f"producibles {len(prod.species)} terminal {len(prod.terminal)} frontier {len(prod.frontier)}")
    out.append(f"complete {'yes' if prod.complete else 'no (lower bound)'}")
    return out


def _bundle(name: str):
    if name not in BUNDLES:
        raise UsageError(f"unknown gadget {name!r}; choose from {', '.join(BUNDLES)}")
    return BUNDLES[name]()


def cmd_gadget_demo(args) -> list[str]:
    if args.list:
        return list(BUNDLES)
    if not args.name:
        raise UsageError("gadget-demo needs a gadget name or --list")
    if args.seed is None:
        raise UsageError("gadget-demo needs --seed")
    b = _bundle(args.name)
    if args.emit:
        d = Path(args.emit)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{args.name}.tiles").write_text(b.tileset_text())
        (d / f"{args.name}.scenario").write_text(b.scenario_text())
    out = [f"# gadget-demo {args.name} seed {args.seed} trials {args.trials}", f"# expect {b.expectation.describe()}"]
    passed = 0
    for seed in range(args.seed, args.seed + args.trials):
        res = run_scenario(b, seed, args.steps)
        passed += res.passed
        line = f"seed {seed} {res.verdict} steps {res.run.steps}"
        out.append(line + (f" ({res.detail})" if res.detail else ""))
        if args.trace:
            out += ["  " + ln for ln in res.run.lines()]
    out.append(f"{passed}/{args.trials} pass")
    if passed != args.trials:
        raise DomainFailure(f"{args.trials - passed} of {args.trials} trials did not pass", out)
    return out


def cmd_witness(args) -> list[str]:
    s1, s2 = witness_shapes()
    if args.out_dir:
        d = Path(args.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "s1.shape").write_text(serialize_shape(s1))
        (d / "s2.shape").write_text(serialize_shape(s2))
    rep = check_witness(s1, s2)
    out = rep.text().splitlines()
    if args.dump_voxels:
        for name, s in (("s1", s1), ("s2", s2)):
            out.append(f"# {name}")
            out += dump_voxels(s).splitlines()
    if args.check and not (rep.ok and rep.sizes == (96, 96)):
        raise DomainFailure("witness check failed", out)
    return out


def cmd_audit(args) -> list[str]:
    if args.seed is None:
        raise UsageError("audit needs --seed")
    cfg = _config(args)
    if args.gadget:
        b = _bundle(args.gadget)
        run = run_random(b.state(), cfg)
        inputs = input_names(b)
        pop = terminal_population(run)
        targets = [st for st, _ in pop if inputs & set(st.tile_names())]
        rep = junk_audit(pop, targets, args.bound, run.state.mode)
        head = f"# audit gadget {args.gadget} seed {args.seed} bound {args.bound}"
    else:
        if not (args.tileset and args.scenario):
            raise UsageError("audit needs --gadget or --tileset and --scenario")
        types, sc = _system(args)
        run = run_random(state_from_scenario(sc, types), cfg)
        targets = [_shape(p) for p in args.target]
        rep = audit_run(run, targets, args.bound)
        head = f"# audit seed {args.seed} bound {args.bound}"
    out = [head, f"# quiescent {'yes' if run.quiescent else 'no'} steps {run.steps}"] + rep.text().splitlines()
    out.append(f"oversize {len(rep.oversize)}")
    if not rep.ok:
        raise DomainFailure(f"{len(rep.oversize)} oversize terminal assemblies", out)
    return out


# -- parser ------------------------------------------------------------------------------------


def _run_flags(p, steps=10_000):
    p.add_argument("--seed", type=int, help="RNG seed (required for randomized commands)")
    p.add_argument("--steps", type=int, default=steps, help="maximum number of steps")
    p.add_argument("--bond-policy", choices=sorted(BOND_FLAGS), default="all")
    p.add_argument("--diffusion", choices=sorted(DIFFUSION_FLAGS), default="placement")
    p.add_argument("--arena", type=int, default=4, help="arena margin for --diffusion path")


def _system_flags(p, required=True):
    p.add_argument("--tileset", required=required)
    p.add_argument("--scenario", required=required)
    p.add_argument("--tau", type=int)
    p.add_argument("--mode", choices=MODES)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="stamr", description=__doc__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser, metavar="command")

    def cmd(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        p.add_argument("--out", help="write the primary output to this file")
        return p

    p = cmd("analyze", cmd_analyze, "shape statistics, cavities and encoding count")
    p.add_argument("--shape", required=True)
    p.add_argument("--dump-voxels", action="store_true")

    p = cmd("encode", cmd_encode, "canonical encoding, or every encoding with --all")
    p.add_argument("--shape", required=True)
    p.add_argument("--all", action="store_true")

    p = cmd("decode", cmd_decode, "decode an .enc file to a .shape listing")
    p.add_argument("--enc", required=True)
    p.add_argument("--dump-voxels", action="store_true")

    p = cmd("roundtrip", cmd_roundtrip, "encode and decode a seeded random corpus")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--bbox", type=int, default=5)

    p = cmd("schedule-check", cmd_schedule_check, "replay decode schedules and check connectivity")
    p.add_argument("--enc")
    p.add_argument("--shape")
    p.add_argument("--seed", type=int)
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--bbox", type=int, default=5)
    p.add_argument("--scaffold", choices=SCAFFOLDS, default="current-slice")

    p = cmd("simulate", cmd_simulate, "one seeded random run")
    _system_flags(p)
    _run_flags(p)
    p.add_argument("--quiet", action="store_true", help="omit the trace")
    p.add_argument("--dump-voxels", action="store_true")

    p = cmd("enumerate", cmd_enumerate, "exhaustive producible set")
    _system_flags(p)
    p.add_argument("--max-size", type=int, default=8)
    p.add_argument("--dump-voxels", action="store_true")

    p = cmd("gadget-demo", cmd_gadget_demo, "run a built-in gadget scenario")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--emit", metavar="DIR", help="also write the tileset and scenario files")

    p = cmd("witness", cmd_witness, "the bent-cavity witness pair")
    p.add_argument("--check", action="store_true")
    p.add_argument("--out-dir", metavar="DIR", help="write s1.shape and s2.shape")
    p.add_argument("--dump-voxels", action="store_true")

    p = cmd("audit", cmd_audit, "run to quiescence and classify terminal assemblies")
    _system_flags(p, required=False)
    _run_flags(p)
    p.add_argument("--gadget")
    p.add_argument("--target", action="append", default=[], metavar="SHAPE", help="target .shape file")
    p.add_argument("--bound", type=int, default=4)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if not args.command:
        ap.print_usage(sys.stderr)
        sys.stderr.write("error: a command is required\n")
        return 2
    failure = None
    try:
        lines = args.fn(args)
    except (UsageError, ValueError, GadgetError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except DomainFailure as e:
        lines, failure = e.lines, str(e)
    text = "".join(ln + "\n" for ln in lines)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if failure is not None:
        sys.stderr.write(f"error: {failure}\n")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
