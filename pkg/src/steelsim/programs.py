"""The registry of runnable example programs (``steelsim list``)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .algebra import int_le
from .channels.chan import Chan, final_trace, new_chan, receiver, recv, send, sender
from .channels.protocol import INT, MsgType, PMsg, PRet, _Const, more, proto_step, xy, xy_loop
from .explorer import Program, register
from .slprop import EMP, Exists, SlProp, payload_at, pts_to
from .semantics.actions import (
    Action,
    alloc,
    cas,
    compose_atomic,
    execute,
    ghost_read,
    new_invariant,
    noop,
    read,
    read_frac,
    with_invariant,
    write,
    write_frac,
)
from .semantics.ctree import ConstPost, CTree, act, bind, frame, par, ret
from .stdlib.forkjoin import fork, join
from .stdlib.locks import acquire, enter_critical, exit_critical, new_critical_flag, new_lock, release
from .stdlib.mref import new_mref, owned, read_mref, recall_mref, witness_mref, write_mref
from .values import HALF, Erased, Frac, reveal


def any_int(c: int) -> SlProp:
    return Exists("n", payload_at(c), lambda n: pts_to(c, n))


def _final_value(addr: int, want: Any):
    def check(x: Any, m: Any) -> Any:
        v = m.cell(addr).value.value
        return None if v == want else f"cell {addr} ends at {v!r}, expected {want!r}"

    return check


# ---------------------------------------------------------------------------
# Locks
# ---------------------------------------------------------------------------


def _locked_incr(l: Any, c: int) -> CTree:
    return bind(acquire(l), lambda _: bind(
        act(read(c)), lambda v: bind(
            act(write(c, v, Frac(v.value + 1))), lambda _: release(l))))


def lock_incr2() -> CTree:
    """Two threads increment a lock-protected counter (the counter is at address 0)."""
    return bind(act(alloc(0)), lambda c: bind(
        new_lock(any_int(c)), lambda l: par(_locked_incr(l, c), _locked_incr(l, c))))


def _racy_incr(c: int) -> CTree:
    return bind(act(read(c)), lambda v: act(write(c, v, Frac(v.value + 1))))


def racy_incr2() -> CTree:
    """The same increments with no lock: both threads claim the whole cell."""
    return bind(act(alloc(0)), lambda c: par(_racy_incr(c), _racy_incr(c)))


def _critical(l: Any, flag: Any, c: int) -> CTree:
    return bind(acquire(l), lambda _: bind(
        enter_critical(flag), lambda _: bind(
            act(read(c)), lambda v: bind(
                act(write(c, v, Frac(v.value + 1))), lambda _: bind(
                    exit_critical(flag), lambda _: release(l))))))


def mutex2() -> CTree:
    """Two lock-protected sections, each bracketed by the ghost in-critical flag."""
    return bind(act(alloc(0)), lambda c: bind(
        new_lock(any_int(c)), lambda l: bind(
            new_critical_flag(), lambda flag: par(_critical(l, flag, c), _critical(l, flag, c)))))


def _unguarded(flag: Any) -> CTree:
    return bind(enter_critical(flag), lambda _: exit_critical(flag))


def mutex_unguarded() -> CTree:
    """Critical sections with no lock: some interleaving sets the flag twice."""
    return bind(new_critical_flag(), lambda flag: par(_unguarded(flag), _unguarded(flag)))


# ---------------------------------------------------------------------------
# cas contention
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _CasSeen:
    """cas that also reports the value it was told was stored."""

    r: int

    def __call__(self, v: Any) -> Action:
        seen = reveal(v).value
        inner = cas(self.r, False, True, Erased(seen))

        def body(rs: Any, uses: frozenset) -> tuple:
            b, rs = execute(inner, rs, uses)
            return (b, seen), rs

        return Action(inner.name, inner.pre, lambda bo: inner.post(bo[0]), body)


def _contend(i: Any, r: int) -> CTree:
    inner = compose_atomic(ghost_read(r), _CasSeen(r), ghost2=False,
                           post=ConstPost(pts_to(r, True)), name=f"cas_round({r})")
    return act(with_invariant(i, inner))


def _round_cells(n: int) -> CTree:
    def go(k: int, cells: tuple) -> CTree:
        if k == n:
            return ret(cells)
        return bind(act(alloc(False)), lambda r: bind(
            act(new_invariant(Exists("b", payload_at(r), lambda b: pts_to(r, b)), f"round{k}")),
            lambda i: go(k + 1, cells + ((r, i),))))

    return go(0, ())


def _contender(cells: tuple) -> CTree:
    def go(k: int, acc: tuple) -> CTree:
        if k == len(cells):
            return ret(acc)
        r, i = cells[k]
        return bind(_contend(i, r), lambda bo: go(k + 1, acc + (bo,)))

    return go(0, ())


CAS_ROUNDS = 2


def cas_contention() -> CTree:
    """Two threads race a cas from False to True on each of two fresh cells."""
    return bind(_round_cells(CAS_ROUNDS), lambda cells: par(_contender(cells), _contender(cells)))


def cas_check(x: Any, m: Any) -> Any:
    left, right = x
    for k, ((b1, o1), (b2, o2)) in enumerate(zip(left, right)):
        if b1 != (o1 is False) or b2 != (o2 is False):
            return f"round {k}: cas result disagrees with the observed value"
        if b1 + b2 != 1:
            return f"round {k}: {b1 + b2} contenders succeeded"
    return None


# ---------------------------------------------------------------------------
# Fork/join and monotonic references
# ---------------------------------------------------------------------------


def forkjoin_basic() -> CTree:
    """Fork a child that sets x from 0 to 1; the parent joins and reads 1."""

    def body(x: int) -> CTree:
        done = ConstPost(pts_to(x, 1))
        f = bind(act(write_frac(x, 0, 1)), lambda _: ret((), done), done)
        g = lambda t: bind(join(t), lambda _: act(read_frac(x, 1)))  # noqa: E731
        return fork(f, g, p=pts_to(x, 0), q=pts_to(x, 1))

    return bind(act(alloc(0)), body)


def forkjoin_check(x: Any, m: Any) -> Any:
    return None if x == ((), 1) else f"parent read {x[1]!r}"


def _mref_incr(l: Any, r: Any) -> CTree:
    return bind(acquire(l), lambda _: bind(
        read_mref(r), lambda v: bind(write_mref(r, v + 1), lambda _: release(l))))


def mref_counter() -> CTree:
    """Write 17, witness ``>= 17``, increment twice in parallel under a lock, recall."""

    def with_ref(r: Any) -> CTree:
        return bind(write_mref(r, 17, 0), lambda _: bind(
            witness_mref(r, lambda v: v >= 17, ">=17"), lambda w: bind(
                new_lock(owned(r)), lambda l: bind(
                    par(_mref_incr(l, r), _mref_incr(l, r)), lambda _: bind(
                        recall_mref(w), lambda _: ret(r))))))

    return bind(new_mref(int_le(), 0), with_ref)


def mref_check(r: Any, m: Any) -> Any:
    h = m.cell(r.addr).value.hist
    if h.last != 19:
        return f"mref ends at {h.last}"
    if list(h.entries) != sorted(h.entries):
        return f"history {list(h.entries)} is not monotone"
    return None


def llist_inv_demo() -> CTree:
    """Build a one-node lock-coupling list by hand and check its invariant after construction."""
    from .stdlib.examples import IStoreView, LLNode, llist_inv
    from .slprop import interp, pure

    view = IStoreView()
    positive = lambda v: pure(v > 0, "v>0")  # noqa: E731

    def check(m: Any, node_addr: int) -> Any:
        view.entries = m.istore
        return interp(llist_inv([positive], node_addr, view), m)

    def with_lock(nxt: int, l: Any) -> CTree:
        node = LLNode(5, nxt, l.handle())
        return bind(act(alloc(node, type_tag="node")), lambda n: act(_probe(check, n)))

    # the tail invariant is emp, so the lock protects emp
    return bind(act(alloc(None, type_tag="nil")), lambda nxt: bind(new_lock(EMP), lambda l: with_lock(nxt, l)))


def _probe(check: Any, n: int) -> Action:
    def body(rs: Any, uses: frozenset) -> tuple:
        return bool(check(rs.mem, n)), rs

    return Action(f"llist_inv_probe({n})", EMP, lambda _: EMP, body, ghost=True)


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------


def chan_xy() -> CTree:
    """Send 17 then 18 on an xy channel while a receiver takes both."""
    p = xy()

    def body(c: Chan) -> CTree:
        s = bind(send(c, p, 17), lambda _: send(c, proto_step(p, 17), 18))
        r = bind(recv(c, p), lambda x: bind(recv(c, proto_step(p, x)), lambda y: ret((x, y))))
        return bind(par(s, r), lambda v: ret((c, v[1])))

    return bind(new_chan(p), body)


def xy_check(v: Any, m: Any) -> Any:
    c, (x, y) = v
    t = final_trace(c, m)
    if list(t.messages) != [x, y] or y != x + 1 or more(t.end):
        return f"trace {t!r} is not [x, x+1] completed"
    return None


DOWHILE_MSGS = (1, 2, 5, 6)


def chan_dowhile() -> CTree:
    """Two rounds of a looping xy protocol."""
    p = xy_loop()

    def sends(c: Chan, cur: Any, msgs: tuple) -> CTree:
        if not msgs:
            return ret(())
        return bind(send(c, cur, msgs[0]), lambda _: sends(c, proto_step(cur, msgs[0]), msgs[1:]))

    def recvs(c: Chan, cur: Any, n: int, acc: tuple) -> CTree:
        if n == 0:
            return ret(acc)
        return bind(recv(c, cur), lambda x: recvs(c, proto_step(cur, x), n - 1, acc + (x,)))

    def body(c: Chan) -> CTree:
        return bind(par(sends(c, p, DOWHILE_MSGS), recvs(c, p, len(DOWHILE_MSGS), ())),
                    lambda v: ret((c, v[1])))

    return bind(new_chan(p), body)


def dowhile_check(v: Any, m: Any) -> Any:
    c, got = v
    t = final_trace(c, m)
    msgs = list(t.messages)
    if msgs != list(got) or len(msgs) != 4:
        return f"trace {msgs} differs from received {list(got)}"
    if any(msgs[k + 1] != msgs[k] + 1 for k in (0, 2)):
        return f"trace {msgs} does not repeat the xy pattern"
    if t.end != xy_loop():
        return "trace does not end back at the loop head"
    return None


CHAN = MsgType("chan", lambda x: isinstance(x, Chan))


def chan_over_chan() -> CTree:
    """Send a channel over a channel, then use it."""
    p1 = PMsg(CHAN, _Const(PRet(())))
    p2 = PMsg(INT, _Const(PRet(())))

    def both(c1: Chan, c2: Chan) -> CTree:
        a = bind(frame(send(c1, p1, c2), sender(c2, p2)), lambda _: send(c2, p2, 42))
        b = bind(frame(recv(c1, p1), receiver(c2, p2)), lambda d: bind(recv(d, p2), lambda n: ret((d, n))))
        return bind(par(a, b), lambda v: ret((c2, v[1])))

    return bind(new_chan(p1), lambda c1: bind(new_chan(p2), lambda c2: both(c1, c2)))


def over_check(v: Any, m: Any) -> Any:
    c2, (d, n) = v
    if d != c2 or n != 42:
        return f"received {d!r}, {n!r}"
    return None


# ---------------------------------------------------------------------------
# Negative programs
# ---------------------------------------------------------------------------


def double_open() -> CTree:
    """Open the same invariant inside itself; rejected when the action is built."""

    def body(r: int) -> CTree:
        return bind(act(new_invariant(any_int(r), "twice")),
                    lambda i: act(with_invariant(i, with_invariant(i, noop()))))

    return bind(act(alloc(0)), body)


def half_write() -> CTree:
    """Write through half a permission; rejected as not frame preserving."""
    return bind(act(alloc(0)), lambda r: act(write(r, Frac(0, HALF), Frac(1, HALF))))


def mref_bad_write() -> CTree:
    """Write 17 then 5 to an mref ordered by <=."""
    return bind(new_mref(int_le(), 0), lambda r: bind(write_mref(r, 17), lambda _: write_mref(r, 5)))


def ghost_concrete_write() -> CTree:
    """A ghost-labelled action that changes a concrete cell."""

    def bad(r: int) -> Action:
        inner = write(r, Frac(0), Frac(1))
        return Action(f"sneaky({r})", inner.pre, inner.post, inner.body, ghost=True)

    return bind(act(alloc(0)), lambda r: act(bad(r)))


def _reg(name: str, build: Any, description: str, check: Any = None, bound: int = 2000) -> None:
    register(Program(name, build, description, check=check, bound=bound))


_reg("lock_incr2", lock_incr2, "lock-protected parallel increment; ends at 2", _final_value(0, 2))
_reg("racy_incr2", racy_incr2, "unlocked parallel increment; footprint violation")
_reg("mutex2", mutex2, "ghost in-critical flag inside two lock-protected sections")
_reg("mutex_unguarded", mutex_unguarded, "ghost in-critical flag with no lock; mutual-exclusion violation")
_reg("cas_contention", cas_contention, "two threads race cas on two cells", cas_check)
_reg("forkjoin_basic", forkjoin_basic, "fork a writer, join it, read its result", forkjoin_check)
_reg("mref_counter", mref_counter, "monotonic counter with witness and recall", mref_check)
_reg("llist_inv_demo", llist_inv_demo, "one-node lock-coupling list invariant",
     lambda x, m: None if x is True else "llist_inv does not hold")
_reg("chan_xy", chan_xy, "send x then x+1 over a channel", xy_check)
_reg("chan_dowhile", chan_dowhile, "two rounds of a looping protocol", dowhile_check)
_reg("chan_over_chan", chan_over_chan, "a channel sent over a channel", over_check)
_reg("double_open", double_open, "negative: one invariant opened twice")
_reg("half_write", half_write, "negative: write with half permission")
_reg("mref_bad_write", mref_bad_write, "negative: mref write against its preorder")
_reg("ghost_concrete_write", ghost_concrete_write, "negative: ghost action mutates concrete state")

NEGATIVE = ("racy_incr2", "mutex_unguarded", "double_open", "half_write", "mref_bad_write", "ghost_concrete_write")
