import dataclasses
import math

import pytest

from stamr.engine import SystemState, enumerate_combinations
from stamr.gadgets import (
    BUNDLES,
    L_TROMINO,
    STAIRCASE4,
    GadgetError,
    build_corner_gadget,
    build_detector,
    build_dissolve_glue,
    build_dissolve_row,
    build_filler_scenario,
    build_message_follower,
    diagonal_detector,
    gadget_only,
    message_exit_sides,
    random_path,
    run_scenario,
)
from stamr.geometry import congruent
from stamr.model import STAM, STAM_R, Supertile
from stamr.rotation import Face

from conftest import OFF, tt


# -- detectors ----------------------------------------------------------------------------


@pytest.mark.parametrize(
    "arity,triggers",
    [
        ("single", [(Face.MX, 1)]),  # below tau
        ("single", [(Face.MX, 2), (Face.MY, 1)]),  # one glue alone reaches tau
        ("duple", [(Face.MX, 1), (Face.MY, 1), (Face.MZ, 1)]),
        ("triple", [(Face.MX, 1), (Face.MY, 1)]),
    ],
)
def test_detector_preconditions(arity, triggers):
    with pytest.raises(GadgetError):
        build_detector(arity, triggers)


def test_diagonal_detector_outcome():
    for seed in range(10):
        res = run_scenario(diagonal_detector(), seed)
        assert res.passed, res.detail


def test_dissolving_detector_detaches_after_detection():
    res = run_scenario(diagonal_detector(dissolve=True), 0)
    assert res.passed, res.detail
    det = [res.run.state.registry[s] for s in res.run.state.present() if len(res.run.state.registry[s]) == 1]
    assert any(all(s is OFF for t in st.tiles.values() for s in t.states) for st in det)


def test_partial_duple_binds_nothing():
    b = BUNDLES["duple"]()
    types = b.info["types"]
    host = next(st for st, _ in b.initial if len(st) > 1)
    state = SystemState.from_supertiles([(host, 1), (Supertile.singleton(types["D1"]), math.inf)], b.tau, b.mode)
    assert enumerate_combinations(state) == []
    state = SystemState.from_supertiles([(host, 1), (Supertile.singleton(types["D2"]), math.inf)], b.tau, b.mode)
    assert enumerate_combinations(state) == []


def test_full_duple_detects():
    b = BUNDLES["duple"]()
    state = b.state()
    host_id = next(s for s in state.present() if len(state.registry[s]) > 1)
    for c in enumerate_combinations(state):
        if host_id in (c.a, c.b):
            other = c.b if c.a == host_id else c.a
            assert len(state.registry[other]) == 2
    for seed in range(10):
        assert run_scenario(b, seed).passed


# -- corner gadgets ------------------------------------------------------------------------


def test_corner_2d_binds_convex_corner_and_activates_edges():
    for seed in range(10):
        res = run_scenario(build_corner_gadget("2d"), seed)
        assert res.passed, res.detail


def test_corner_3d_self_assembles_without_rotation():
    g = gadget_only(build_corner_gadget("3d", mode=STAM))
    for seed in range(10):
        res = run_scenario(g, seed)
        assert res.passed, res.detail


def test_corner_3d_twists_when_rotation_is_allowed():
    # A single strength-2 face bond leaves the partner free to spin about the bond axis.
    g = gadget_only(build_corner_gadget("3d", mode=STAM_R))
    res = run_scenario(g, 0)
    sevens = [res.run.state.registry[s] for s in res.run.terminal_ids() if len(res.run.state.registry[s]) == 7]
    assert sevens and not any(congruent(s.points, g.info["target"].points) for s in sevens)


def test_corner_3d_dissolve_waits_for_three_bonds():
    b = build_corner_gadget("3d")
    for seed in range(20):
        res = run_scenario(b, seed)
        assert res.passed, res.detail


def test_corner_order_check_catches_early_dissolve():
    from stamr.gadgets import TraceOrder

    b = build_corner_gadget("3d")
    res = run_scenario(b, 0)
    trace = res.run.trace
    c = next(i for i, ev in enumerate(trace) if ev.after is not None and _three(ev, b))
    k = next(
        i for i, ev in enumerate(trace)
        if ev.tile_before is not None and ev.tile_before.name in b.info["gadget_names"]
        and ev.tile_before.type.signals[ev.action.signal].action is OFF
    )
    assert k > c
    # the same off signal with no three-bond event before it must be flagged
    res.run.trace = [dataclasses.replace(trace[k], after=None)]
    assert not TraceOrder("corner-three-bonds-before-dissolve").check(res.run, b).ok


def _three(ev, b):
    from stamr.gadgets import _bonded_on

    return _bonded_on(ev.after, b.info["H"], b.info["g"]) == 3


# -- filler tiles ---------------------------------------------------------------------------


def test_filler_l_fills_concave_corner():
    for seed in range(10):
        res = run_scenario(build_filler_scenario(L_TROMINO), seed)
        assert res.passed, res.detail


def test_filler_staircase_completes_rectangle():
    b = build_filler_scenario(STAIRCASE4)
    for seed in range(3):
        res = run_scenario(b, seed, max_steps=20_000)
        assert res.passed, res.detail


def test_filler_negative_control_fails():
    res = run_scenario(BUNDLES["filler-negative"](), 0)
    assert res.verdict == "fail"


def test_run_scenario_reports_inconclusive():
    res = run_scenario(build_filler_scenario(STAIRCASE4), 0, max_steps=3)
    assert res.verdict == "inconclusive"


# -- dissolving ------------------------------------------------------------------------------


def test_dissolve_glue_adds_off_signals():
    t = tt("T", [("+x", "a", 2), ("-x", "b", 2), ("+y", "c", 1)])
    d = build_dissolve_glue(t, (Face.PX, "a"))
    targets = {s.target for s in d.signals if s.source == (Face.PX, "a") and s.action is OFF}
    assert targets == {(g.face, g.label) for g in t.glues}
    with pytest.raises(GadgetError):
        build_dissolve_glue(t, (Face.PZ, "a"))


def test_dissolve_row_ends_in_singletons():
    b = build_dissolve_row(3)
    res = run_scenario(b, 0)
    assert res.passed, res.detail
    sizes = sorted(len(res.run.state.registry[s]) for s in res.run.state.present())
    assert sizes.count(1) >= 3 and max(sizes) == 1


@pytest.mark.slow
def test_dissolve_row_order_independent():
    b = build_dissolve_row(3)
    bad = [s for s in range(1000) if not run_scenario(b, s).passed]
    assert bad == []


# -- message following -----------------------------------------------------------------------


def test_straight_path():
    b = build_message_follower([(0, 0, 0), (0, 1, 0), (0, 2, 0)])
    res = run_scenario(b, 0)
    assert res.passed, res.detail


def test_single_turn_path():
    b = BUNDLES["message-turn"]()
    res = run_scenario(b, 0)
    assert res.passed, res.detail
    sides = message_exit_sides(res.run, b)
    assert [want for want, *_ in sides] == [Face.PY, Face.PX, Face.PX, Face.PX]


def test_message_follower_rejects_non_paths():
    with pytest.raises(GadgetError):
        build_message_follower([(0, 0, 0), (2, 0, 0)])
    with pytest.raises(GadgetError):
        build_message_follower([(0, 0, 0), (1, 0, 0), (0, 0, 0)])


@pytest.mark.slow
def test_fifty_random_paths():
    bad = []
    for seed in range(50):
        path = random_path(seed, 3 + seed % 10)
        res = run_scenario(build_message_follower(path), seed)
        if not res.passed:
            bad.append((seed, res.detail))
    assert bad == []


def test_bundle_catalog_round_trip_names():
    assert set(BUNDLES) >= {"diagonal", "duple", "corner-2d", "corner-3d", "filler-l", "dissolve-row", "message-turn"}
