import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from stamr.gadgets import diagonal_detector
from stamr.model import (
    STAM,
    STAM_R,
    Glue,
    Supertile,
    Tile,
    TilesetError,
    auto_bond,
    canonical,
    canonical_form,
    check_strength_consistency,
    complement_label,
    formable_bonds,
    is_tau_stable,
    min_cut,
    min_cut_weight,
    place,
    process_signal,
    split,
    transition,
)
from stamr.rotation import IDENTITY, N_ROTATIONS, RZ90, inverse, rotate_vec

from conftest import ON, LATENT, OFF, oracle_min_cut, random_bonded_supertile, tt


# -- labels and glues ---------------------------------------------------------------


@pytest.mark.parametrize("label,expected", [("a", "a*"), ("a*", "a"), ("gx", "gx*")])
def test_complement_label(label, expected):
    assert complement_label(label) == expected
    assert complement_label(complement_label(label)) == label


def test_label_binds_only_its_complement():
    a, a_star, b = Glue("a", 1), Glue("a*", 1), Glue("b", 1)
    assert a.binds(a_star) and a_star.binds(a)
    assert not a.binds(a) and not a.binds(b)


@pytest.mark.parametrize("bad", ["", "*", "a b", "a**"])
def test_bad_labels_rejected(bad):
    with pytest.raises((TilesetError, ValueError)):
        Glue(bad, 1)


def test_transition_table_is_exactly_the_legal_set():
    legal = {(ON, OFF), (LATENT, ON), (LATENT, OFF)}
    for cur in (ON, LATENT, OFF):
        for want in (ON, OFF):
            expected = want if (cur, want) in legal else cur
            assert transition(cur, want) is expected


def test_strength_consistency_checked():
    a = tt("A", [("+x", "a", 2)])
    b = tt("B", [("-x", "a*", 1)])
    with pytest.raises(TilesetError):
        check_strength_consistency([a, b])
    assert check_strength_consistency([a, tt("C", [("-x", "a*", 2)])]) == {"a": 2}


def test_signal_must_reference_existing_glues():
    with pytest.raises(TilesetError):
        tt("A", [("+x", "a", 1)], [(("+y", "a"), ("+x", "a"), OFF)])
    with pytest.raises(TilesetError):
        tt("A", [("+x", "a", 1)], [(("+x", "a"), ("-x", "b"), OFF)])


def test_several_glues_per_face_allowed_but_not_duplicates():
    t = tt("A", [("+x", "a", 1), ("+x", "b", 1)])
    assert len(t.glues) == 2
    with pytest.raises(TilesetError):
        tt("A", [("+x", "a", 1), ("+x", "a", 1)])


# -- formable bonds -------------------------------------------------------------------


def test_one_strength2_pair():
    a, b = tt("A", [("+x", "a", 2)]), tt("B", [("-x", "a*", 2)])
    cands, total = formable_bonds(Supertile.singleton(a), Supertile.singleton(b), IDENTITY, (1, 0, 0))
    assert len(cands) == 1 and total == 2


def test_latent_glue_cannot_bond():
    a, b = tt("A", [("+x", "a", 2)]), tt("B", [("-x", "a*", 2, LATENT)])
    cands, total = formable_bonds(Supertile.singleton(a), Supertile.singleton(b), IDENTITY, (1, 0, 0))
    assert cands == [] and total == 0


def test_overlap_rejected():
    a = tt("A", [("+x", "a", 2)])
    assert formable_bonds(Supertile.singleton(a), Supertile.singleton(a), IDENTITY, (0, 0, 0)) is None


def test_diagonal_detector_cooperative_pair():
    b = diagonal_detector()
    host = b.initial[0][0]
    det = Supertile.singleton(b.info["types"]["D"])
    cands, total = formable_bonds(host, det, IDENTITY, (0, 0, 0))
    assert len(cands) == 2 and total == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, N_ROTATIONS - 1))
def test_bond_total_symmetric_under_inverse_motion(seed, r):
    rng = random.Random(seed)
    labels = ["a", "b"]
    strength = {"a": 1, "b": 2}

    def rand_tile(name):
        gl = []
        for f in ("+x", "-x", "+y", "-y", "+z", "-z"):
            if rng.random() < 0.5:
                lab = rng.choice(labels) + rng.choice(["", "*"])
                gl.append((f, lab, strength[lab.rstrip("*")]))
        return tt(name, gl)

    a = Supertile.singleton(rand_tile("A"))
    b = Supertile.singleton(rand_tile("B"))
    t = rng.choice([(1, 0, 0), (0, -1, 0), (0, 0, 1)])
    fwd = formable_bonds(a, b, r, t)
    ri = inverse(r)
    back_t = tuple(-c for c in rotate_vec(ri, t))
    bwd = formable_bonds(b, a, ri, back_t)
    assert fwd[1] == bwd[1]


# -- cuts ------------------------------------------------------------------------------


def _chain(strengths, tau=2):
    n = len(strengths) + 1
    types = []
    for i in range(n):
        gl = []
        if i > 0:
            gl.append(("-x", f"l{i - 1}*", strengths[i - 1]))
        if i < n - 1:
            gl.append(("+x", f"l{i}", strengths[i]))
        types.append(tt(f"T{i}", gl))
    return auto_bond(Supertile({(i, 0, 0): Tile(t) for i, t in enumerate(types)}))


def test_min_cut_examples():
    assert min_cut_weight(_chain([1])) == 1 and not is_tau_stable(_chain([1]), 2)
    assert min_cut_weight(_chain([2, 2])) == 2 and is_tau_stable(_chain([2, 2]), 2)
    assert min_cut_weight(Supertile.singleton(tt("A"))) == math.inf


def test_square_of_strength1_bonds_is_stable():
    pts = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)]
    gl = {p: [] for p in pts}
    for k, (p, q) in enumerate(zip(pts, pts[1:] + pts[:1])):
        v = tuple(b - a for a, b in zip(p, q))
        f = {(1, 0, 0): "+x", (-1, 0, 0): "-x", (0, 1, 0): "+y", (0, -1, 0): "-y"}[v]
        g = {"+x": "-x", "-x": "+x", "+y": "-y", "-y": "+y"}[f]
        gl[p].append((f, f"s{k}", 1))
        gl[q].append((g, f"s{k}*", 1))
    st_ = auto_bond(Supertile({p: Tile(tt(f"Q{i}", gl[p])) for i, p in enumerate(pts)}))
    assert len(st_.bonds) == 4
    weights = st_.edge_weights()
    assert oracle_min_cut(pts, weights) == 2 == min_cut_weight(st_)


def test_disconnected_bond_graph_cuts_at_zero():
    a, b = tt("A"), tt("B")
    st_ = Supertile({(0, 0, 0): Tile(a), (1, 0, 0): Tile(b)})
    w, side = min_cut(st_)
    assert w == 0 and side in ({(0, 0, 0)}, {(1, 0, 0)})


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32))
def test_min_cut_matches_bruteforce(seed):
    s, weights = random_bonded_supertile(random.Random(seed))
    assert min_cut_weight(s) == oracle_min_cut(s.tiles, weights)


def test_split_drops_crossing_bonds():
    s = _chain([2, 1])
    a, b = split(s, {(0, 0, 0), (1, 0, 0)})
    assert len(a) == 2 and len(a.bonds) == 1 and len(b) == 1 and not b.bonds


# -- signals ----------------------------------------------------------------------------


def test_signal_fires_once_and_off_drops_bond():
    a = tt("A", [("+x", "a", 2)])
    b = tt("B", [("-x", "a*", 2)], [(("-x", "a*"), ("-x", "a*"), OFF)])
    pair = auto_bond(Supertile({(0, 0, 0): Tile(a), (1, 0, 0): Tile(b)}))
    tile = pair.tiles[(1, 0, 0)]
    assert tile.pending == frozenset() and tile.completed == {0}
    assert tile.states[0] is OFF
    assert not pair.bonds


def test_process_signal_noop_still_completes():
    a = tt("A", [("+x", "a", 2)])
    b = tt("B", [("-x", "a*", 2), ("+y", "q", 1)], [(("-x", "a*"), ("+y", "q"), ON)])
    from stamr.model import form_bond

    s = Supertile({(0, 0, 0): Tile(a), (1, 0, 0): Tile(b)})
    s = form_bond(s, (((0, 0, 0), 0), ((1, 0, 0), 0)))
    s2, changed = process_signal(s, (1, 0, 0), 0)
    assert not changed
    t = s2.tiles[(1, 0, 0)]
    assert t.completed == {0} and not t.pending and t.states[1] is ON


# -- canonical forms -------------------------------------------------------------------


def _l_shape(rot=IDENTITY, shift=(0, 0, 0)):
    t = tt("U")
    pts = [(0, 0, 0), (1, 0, 0), (0, 1, 0)]
    s = Supertile({p: Tile(t) for p in pts})
    return place(s, rot, shift)


def test_translation_invariance():
    a = Supertile({(5, 5, 5): Tile(tt("A", [("+x", "a", 1)]))})
    b = Supertile({(0, 0, 0): Tile(tt("A", [("+x", "a", 1)]))})
    assert canonical_form(a, STAM) == canonical_form(b, STAM)
    assert canonical_form(a) == canonical_form(b)


def test_rotated_l_equal_in_stam_r_only():
    a, b = _l_shape(), _l_shape(RZ90, (3, 0, 0))
    assert canonical_form(a, STAM_R) == canonical_form(b, STAM_R)
    assert canonical_form(a, STAM) != canonical_form(b, STAM)


def test_glue_state_is_part_of_identity():
    on = tt("A", [("+x", "a", 1)])
    off = tt("A", [("+x", "a", 1, OFF)])
    assert canonical_form(Supertile.singleton(on)) != canonical_form(Supertile.singleton(off))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, N_ROTATIONS - 1))
def test_canonical_rotation_invariant_and_idempotent(seed, r):
    s, _ = random_bonded_supertile(random.Random(seed), max_tiles=6)
    key, placed = canonical(s)
    assert canonical(place(s, r, (2, -1, 4)))[0] == key
    assert canonical(placed)[0] == key
