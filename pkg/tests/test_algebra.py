from __future__ import annotations

import itertools
from dataclasses import replace
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from steelsim.algebra import (
    Pcm,
    Preorder,
    check_preorder,
    equality_preorder,
    exclusive,
    exclusive_bruteforce,
    fold_op,
    frac_carrier,
    frac_hist,
    frac_pcm,
    frac_with_carrier,
    frame_preserving,
    frame_preserving_bruteforce,
    histories,
    history,
    history_extension,
    induces,
    int_le,
    le_bruteforce,
    pcm_check_laws,
    pcm_le,
    pcm_of_preorder,
    preorder_of_pcm,
    total_preorder,
)
from steelsim.errors import DomainError, HistoryError, PcmError, ResourceCapError, UndecidableError
from steelsim.values import FracHist, Frac, Hist

FRAC = frac_pcm()
QUARTERS = (F(1, 4), F(1, 2), F(3, 4), F(1))
CARRIER = frac_carrier((5, 6), QUARTERS)

fracs = st.builds(Frac, st.sampled_from((5, 6)), st.sampled_from(QUARTERS))
frac_or_unit = st.one_of(st.none(), fracs)


# pcm_check_laws --------------------------------------------------------------


def test_frac_laws_on_small_carrier():
    assert pcm_check_laws(FRAC, [None, Frac(5, F(1, 2)), Frac(5, F(1, 4))]).ok


def test_broken_commutativity_reports_witness():
    broken = replace(FRAC, id="broken", op_fn=lambda a, b: a if a is not None else b)
    rep = pcm_check_laws(broken, [None, Frac(5, F(1, 4)), Frac(5, F(1, 2))])
    assert not rep.ok
    fails = rep.failures()
    assert "commutativity" in fails
    assert fails["commutativity"] is not None


def test_unit_only_carrier():
    assert pcm_check_laws(FRAC, [None]).ok


# frac ------------------------------------------------------------------------


def test_frac_op_sums_permissions():
    assert FRAC.op(Frac(5, F(1, 2)), Frac(5, F(1, 4))) == Frac(5, F(3, 4))
    assert not FRAC.composable(Frac(5, F(1, 2)), Frac(6, F(1, 2)))
    assert FRAC.op(None, Frac(5, F(1, 2))) == Frac(5, F(1, 2))


def test_frac_op_outside_domain_raises():
    with pytest.raises(PcmError):
        FRAC.op(Frac(5, F(3, 4)), Frac(5, F(1, 2)))


def test_perm_must_be_positive_and_rational():
    with pytest.raises(ValueError):
        Frac(5, 0)
    with pytest.raises(ValueError):
        Frac(5, F(3, 2))
    with pytest.raises(TypeError):
        Frac(5, 0.5)


def test_pcm_le_examples():
    assert pcm_le(FRAC, Frac(5, F(1, 2)), Frac(5, 1))
    assert not pcm_le(FRAC, Frac(5, 1), Frac(5, F(1, 2)))
    assert le_bruteforce(FRAC, Frac(5, F(1, 2)), Frac(5, 1), CARRIER)


def test_domain_mismatch():
    with pytest.raises(DomainError):
        pcm_le(FRAC, 5, Frac(5))


def test_frame_preserving_examples():
    assert frame_preserving(FRAC, Frac("v"), Frac("w"))
    assert not frame_preserving(FRAC, Frac("v", F(1, 2)), Frac("w", F(1, 2)))
    # the unit rewrites to itself only when no other frame exists
    assert frame_preserving_bruteforce(FRAC, None, None, [None])
    assert not frame_preserving_bruteforce(FRAC, None, None, CARRIER)


def test_exclusive_examples():
    assert exclusive(FRAC, Frac("v"))
    assert not exclusive(FRAC, None)
    assert not exclusive(FRAC, Frac("v", F(1, 2)))
    assert exclusive_bruteforce(FRAC, Frac(5), CARRIER)


def test_share_gather():
    u, v = Frac(5, F(1, 4)), Frac(5, F(1, 2))
    assert FRAC.op(u, v) == Frac(5, F(3, 4))
    assert not FRAC.composable(Frac(5, F(1, 4)), Frac(6, F(1, 4)))


def test_undecidable_without_carrier():
    bare = replace(FRAC, id="bare", fp_fn=None, exclusive_fn=None, carrier_hint=None)
    with pytest.raises(UndecidableError):
        frame_preserving(bare, Frac(5), Frac(6))
    with pytest.raises(UndecidableError):
        exclusive(bare, Frac(5))


def test_carrier_variant_falls_back_to_bruteforce():
    small = frac_with_carrier(CARRIER)
    assert frame_preserving(small, Frac(5), Frac(6))
    assert not exclusive(small, Frac(5, F(1, 2)))


@given(frac_or_unit, frac_or_unit)
def test_composable_symmetric(a, b):
    assert FRAC.composable(a, b) == FRAC.composable(b, a)


@given(frac_or_unit, frac_or_unit, frac_or_unit)
def test_op_associative_where_defined(a, b, c):
    if FRAC.composable(a, b) and FRAC.composable(FRAC.op(a, b), c):
        assert FRAC.composable(b, c)
        assert FRAC.op(FRAC.op(a, b), c) == FRAC.op(a, FRAC.op(b, c))


@given(frac_or_unit, frac_or_unit)
def test_fast_procedures_match_oracles(x, y):
    assert pcm_le(FRAC, x, y) == le_bruteforce(FRAC, x, y, CARRIER)
    assert frame_preserving(FRAC, x, y) == frame_preserving_bruteforce(FRAC, x, y, CARRIER)
    assert exclusive(FRAC, x) == exclusive_bruteforce(FRAC, x, CARRIER)


def test_fold_op():
    assert fold_op(FRAC, [Frac(1, F(1, 4))] * 4) == Frac(1)
    assert fold_op(FRAC, []) is None


# preorders -------------------------------------------------------------------


def test_preorder_of_pcm_relates_full_rewrites():
    carrier = [None, Frac("a"), Frac("b")]
    q = preorder_of_pcm(FRAC, carrier)
    assert q(Frac("a"), Frac("b"))
    assert all(q(x, x) for x in carrier)
    assert check_preorder(q, carrier) is None


def test_preorder_of_pcm_cap():
    with pytest.raises(ResourceCapError):
        preorder_of_pcm(FRAC, CARRIER, cap=3)


def test_induces_examples():
    carrier = [None, Frac("a"), Frac("b")]
    assert induces(FRAC, total_preorder(), carrier)
    assert not induces(FRAC, equality_preorder(), carrier)
    q = int_le((0, 1, 2))
    assert induces(pcm_of_preorder(q), history_extension(q), histories(q, (0, 1, 2), 2))


def test_check_preorder_finds_intransitivity():
    bad = Preorder("succ", lambda a, b: b in (a, a + 1))
    assert check_preorder(bad, [0, 1, 2]) is not None


# histories -------------------------------------------------------------------


def test_history_pcm_examples():
    q = int_le()
    hp = pcm_of_preorder(q)
    x, xy_ = history(q, [1]), history(q, [1, 2])
    assert hp.op(x, xy_) == xy_
    assert hp.op(Hist((), q.id), xy_) == xy_
    assert not hp.composable(history(q, [1, 2]), history(q, [1, 3]))


def test_history_rejects_bad_step():
    with pytest.raises(HistoryError):
        history(int_le(), [3, 1])


def test_history_laws():
    q = int_le((0, 1, 2))
    assert pcm_check_laws(pcm_of_preorder(q), histories(q, (0, 1, 2), 3)).ok


def test_frac_hist_agrees_with_oracle():
    q = int_le((0, 1))
    fh = frac_hist(q)
    hs = [h for h in histories(q, (0, 1), 2) if h.entries]
    carrier = [None] + [FracHist(p, h) for h in hs for p in (F(0), F(1, 2), F(1))]
    assert pcm_check_laws(fh, carrier).ok
    for x, y in itertools.product(carrier, repeat=2):
        assert pcm_le(fh, x, y) == le_bruteforce(fh, x, y, carrier)
        assert frame_preserving(fh, x, y) == frame_preserving_bruteforce(fh, x, y, carrier)


def test_frac_hist_successors_respect_order():
    q = int_le()
    fh = frac_hist(q)
    v = FracHist(1, history(q, [3]))
    succ = list(fh.successors_fn(v))
    assert succ and all(q(3, s.hist.last) for s in succ)
    assert list(fh.successors_fn(FracHist(F(1, 2), history(q, [3])))) == []


@given(st.lists(st.integers(0, 3), max_size=4).map(sorted), st.lists(st.integers(0, 3), max_size=4).map(sorted))
def test_history_op_keeps_longer(a, b):
    q = int_le()
    hp = pcm_of_preorder(q)
    ha, hb = history(q, a), history(q, b)
    if hp.composable(ha, hb):
        out = hp.op(ha, hb)
        assert out == (ha if len(a) >= len(b) else hb)
        assert ha.is_prefix_of(out) and hb.is_prefix_of(out)


def test_pcm_identity_is_by_tag():
    assert frac_pcm() is frac_pcm()
    assert frac_hist(int_le()) == frac_hist(int_le())
    assert isinstance(FRAC, Pcm)
