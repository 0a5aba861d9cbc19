from __future__ import annotations

from fractions import Fraction as F
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from steelsim.errors import CompositionError, ConstructionError, DoubleOpenError
from steelsim.explorer import ExhaustiveStrategy, Program, explore
from steelsim.memory import Mem
from steelsim.semantics import (
    Act,
    Bind,
    BoundExceeded,
    Completed,
    Incomplete,
    Par,
    Ret,
    RunConfig,
    Violation,
    act,
    alloc,
    bind,
    cas,
    compose_atomic,
    concrete_projection,
    free,
    frame,
    ghost_alloc,
    ghost_read,
    ghost_write,
    measure,
    new_invariant,
    noop,
    par,
    read,
    ret,
    run,
    seq,
    step,
    with_invariant,
    write,
    write_frac,
)
from steelsim.semantics.ctree import ConstPost
from steelsim.slprop import EMP, interp, pts_to
from steelsim.substrate import RunState, Tape
from steelsim.values import Erased, Frac, reveal

half = F(1, 2)


def _with_cell(v=5, then=None, ghost=False):
    a = ghost_alloc(v) if ghost else alloc(v)
    return bind(act(a), then or (lambda r: ret(r)))


# primitive actions ----------------------------------------------------------


def test_alloc_in_empty_mem():
    out = run(act(alloc(5)))
    assert isinstance(out, Completed)
    assert out.value == 0
    assert out.mem.ctr == 1
    assert out.mem.cell(0).value == Frac(5)
    assert interp(pts_to(0, 5), out.mem)


def test_read_with_partial_demand():
    out = run(_with_cell(5, lambda r: act(read(r, Frac(5, half)))))
    assert isinstance(out, Completed) and out.value == Frac(5)
    assert out.mem.cell(0).value == Frac(5)


def test_read_of_freed_cell_fails_precondition():
    prog = _with_cell(5, lambda r: seq(act(free(r, Frac(5))), act(read(r, Frac(5)))))
    out = run(prog)
    assert isinstance(out, Violation)


def test_write_full_permission():
    out = run(_with_cell(5, lambda r: act(write_frac(r, 5, 9))))
    assert isinstance(out, Completed)
    assert out.mem.cell(0).value == Frac(9)
    assert isinstance(run(_with_cell(5, lambda r: act(write_frac(r, 5, 5)))), Completed)


def test_half_write_rejected_at_construction():
    with pytest.raises(ConstructionError):
        write(0, Frac(5, half), Frac(9, half))


def test_free():
    out = run(_with_cell(5, lambda r: act(free(r, Frac(5)))))
    assert isinstance(out, Completed)
    assert out.mem.cell(0).value is None
    with pytest.raises(ConstructionError):
        free(0, Frac(5, half))
    twice = _with_cell(5, lambda r: seq(act(free(r, Frac(5))), act(free(r, Frac(5)))))
    assert isinstance(run(twice), Violation)


def test_ghost_read_keeps_concrete_heap():
    out = run(_with_cell(5, lambda r: act(ghost_read(r))))
    assert isinstance(out, Completed) and isinstance(out.value, Erased)


def test_ghost_write_to_erased_cell_allowed():
    out = run(_with_cell(5, lambda r: act(ghost_write(r, Frac(5), Frac(6))), ghost=True))
    assert isinstance(out, Completed)
    assert out.mem.cell(0).value == Frac(6)


def test_ghost_write_to_concrete_cell_rejected():
    out = run(_with_cell(5, lambda r: act(ghost_write(r, Frac(5), Frac(6)))))
    assert isinstance(out, Violation) and out.kind == "ghost"


def test_concrete_projection_ignores_ghost_cells():
    m = Mem()
    out = run(_with_cell(5, ghost=True))
    assert concrete_projection(out.mem) == concrete_projection(m)


def test_cas():
    hit = run(_with_cell(0, lambda r: act(cas(r, 0, 1, Erased(0)))))
    assert hit.value is True and hit.mem.cell(0).value == Frac(1)
    miss = run(_with_cell(1, lambda r: act(cas(r, 0, 1, Erased(1)))))
    assert miss.value is False and miss.mem.cell(0).value == Frac(1)


def test_cas_contract_is_checked():
    out = run(_with_cell(1, lambda r: act(cas(r, 0, 1))))
    assert isinstance(out, Completed) and out.value is False


# invariants -----------------------------------------------------------------


def _payload(v):
    return Erased(reveal(v).value)


def _inv_prog(body_for):
    def after_alloc(r):
        return bind(act(new_invariant(pts_to(r, 0))), lambda i: body_for(r, i))
    return _with_cell(0, after_alloc)


def test_new_invariant_names_are_positional():
    def two(r, i):
        return bind(act(alloc(1)), lambda r2: bind(act(new_invariant(pts_to(r2, 1))),
                                                   lambda j: ret((i.name, j.name))))
    out = run(_inv_prog(two))
    assert isinstance(out, Completed)
    assert out.value == (0, 1)
    assert len(out.mem.istore) == 2


def test_with_invariant_restores():
    def body(r, i):
        inner = compose_atomic(ghost_read(r), lambda v: cas(r, 0, 0, _payload(v)), ghost2=False,
                               post=ConstPost(pts_to(r, 0)))
        return act(with_invariant(i, inner))
    assert isinstance(run(_inv_prog(body)), Completed)


def test_with_invariant_detects_leak():
    def body(r, i):
        inner = compose_atomic(ghost_read(r), lambda v: cas(r, 0, 1, _payload(v)), ghost2=False,
                               post=ConstPost(pts_to(r, 1)))
        return act(with_invariant(i, inner))
    out = run(_inv_prog(body))
    assert isinstance(out, Violation) and out.kind == "invariant-restoration"


def test_nested_open_rejected():
    from steelsim.semantics import IVal

    i = IVal(0, EMP, 0)
    with pytest.raises(DoubleOpenError):
        with_invariant(i, with_invariant(i, noop()))


def test_compose_atomic_rules():
    a = compose_atomic(ghost_read(0), lambda v: cas(0, 0, 1, v), ghost2=False)
    assert not a.ghost
    with pytest.raises(CompositionError):
        compose_atomic(cas(0, 0, 1), lambda b: cas(0, 1, 0), ghost2=False)
    g = compose_atomic(ghost_read(0), lambda v: ghost_read(0), ghost2=True)
    assert g.ghost


# stepping -------------------------------------------------------------------


def test_step_ret_is_terminal():
    t = ret(3)
    rs = RunState()
    assert step(rs, t)[1] is t


def test_step_bind_ret_applies_continuation():
    target = ret(4)
    _, t1, _ = step(RunState(), Bind(ret(3), lambda x: target if x == 3 else ret(0)))
    assert t1 is target


def test_step_par_uses_tape():
    left, right = act(noop("l")), act(noop("r"))
    rs = RunState(tape=Tape((True,)))
    _, t1, _ = step(rs, par(left, right))
    assert isinstance(t1, Par) and isinstance(t1.left, Ret) and t1.right is right
    rs = RunState(tape=Tape((False,)))
    _, t1, _ = step(rs, par(left, right))
    assert t1.left is left and isinstance(t1.right, Ret)


def test_par_one_sided_ret_consumes_no_bit():
    rs = RunState(tape=Tape(()))
    rs1, t1, _ = step(rs, par(ret(1), act(noop())))
    assert rs1.tape.cursor == 0 and isinstance(t1.right, Ret)


def test_par_pairs_results_left_right():
    out = run(par(ret(1), ret(2)))
    assert out.value == (1, 2)


def test_frame_widens_footprint():
    prog = _with_cell(5, lambda r: frame(act(noop()), pts_to(r, 5)))
    assert isinstance(run(prog), Completed)


# runs -----------------------------------------------------------------------


def test_run_ret():
    out = run(ret(7))
    assert isinstance(out, Completed) and out.steps == 0 and out.value == 7


def test_run_bound_exceeded():
    def spin(_):
        return bind(act(noop()), spin)
    out = run(spin(None), cfg=RunConfig(bound=50))
    assert isinstance(out, BoundExceeded)


def test_run_finite_tape_incomplete():
    out = run(par(act(noop()), act(noop())), tape=Tape(()))
    assert isinstance(out, Incomplete)


def test_racy_full_writes_violate():
    def both(r):
        return par(act(write_frac(r, 0, 1)), act(write_frac(r, 0, 2)))
    out = run(_with_cell(0, both), tape=Tape((True, True)))
    assert isinstance(out, Violation) and out.kind == "footprint"


def test_precondition_checked_on_entry():
    out = run(act(read(3, Frac(0))))
    assert isinstance(out, Violation) and out.kind == "precondition"


def test_post_checked_at_the_end():
    out = run(ret(0, lambda _: pts_to(0, 1)))
    assert isinstance(out, Violation)


def _chain(n, tag):
    return seq(*[act(noop(f"{tag}{i}")) for i in range(n)])


@pytest.mark.parametrize("m,n", [(1, 1), (2, 2), (3, 2), (3, 3)])
def test_exhaustive_visits_every_interleaving(m, n):
    prog = Program(f"chains{m}{n}", lambda: par(_chain(m, "a"), _chain(n, "b")))
    rep = explore(prog, ExhaustiveStrategy(20, dedup=False))
    assert rep.completed == comb(m + n, m)
    assert rep.violations == 0


SKELETONS = st.recursive(
    st.sampled_from(["act", "ret"]),
    lambda kids: st.one_of(st.tuples(st.just("par"), kids, kids), st.tuples(st.just("frame"), kids),
                           st.tuples(st.just("bind"), kids)),
    max_leaves=6,
)


def _build(s):
    if s == "act":
        return act(noop())
    if s == "ret":
        return ret(0)
    if s[0] == "par":
        return Par(_build(s[1]), _build(s[2]))
    if s[0] == "frame":
        return frame(_build(s[1]), EMP)
    return Bind(_build(s[1]), lambda x: Ret(x))


@settings(max_examples=80)
@given(SKELETONS, st.integers(0, 1000))
def test_measure_strictly_decreases(shape, seed):
    t = _build(shape)
    rs = RunState(tape=Tape(seed=seed))
    while not isinstance(t, Ret):
        before = measure(t)
        rs, t, _ = step(rs, t)
        assert measure(t) < before


def test_act_node_reports_action():
    assert isinstance(act(noop()), Act)
