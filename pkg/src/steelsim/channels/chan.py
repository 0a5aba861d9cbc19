"""Synchronous simplex channels whose traffic is checked against a protocol.

A channel is two cells (the sender's and the receiver's last ``ChanVal``), a
ghost trace reference that only grows, and a lock protecting ``chan_inv``.
Each endpoint owns half of its cell; the invariant owns the other halves
and the whole trace.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Optional

from ..algebra import Pcm, Preorder, frac_hist, history
from ..errors import CheckViolation
from ..slprop import Exists, PtsTo, SlProp, hist_at, payload_at, pure, pts_to, star
from ..substrate import RunState, put_checked, recall, witness
from ..semantics.actions import Action, alloc, ghost_alloc, read, write
from ..semantics.ctree import ConstPost, CTree, act, bind, frame, ret
from ..stdlib.locks import Lock, LockRef, acquire, lock_of, new_lock, release
from ..values import HALF, ONE, Frac, FracHist, Hist
from .protocol import (
    Protocol,
    ProtocolError,
    Trace,
    extend_1,
    more,
    msg_t,
    proto_step,
    sentinel,
    trace_extends,
    waiting,
)


def _trace_candidates(t: Trace) -> list:
    if not more(t.end):
        return []
    mt = msg_t(t.end)
    return [extend_1(t, m) for m in mt.hint if mt.accepts(m)]


TRACE_ORDER = Preorder("trace~>", trace_extends)
TRACE_PCM = frac_hist(TRACE_ORDER, _trace_candidates)


@dataclass(frozen=True)
class ChanVal:
    prot: Protocol
    msg: Any
    ctr: int

    def __post_init__(self) -> None:
        if not more(self.prot) or not msg_t(self.prot).accepts(self.msg):
            raise ProtocolError(f"message {self.msg!r} does not fit the protocol state")

    @property
    def after(self) -> Protocol:
        """The protocol state once ``msg`` has been exchanged."""
        return proto_step(self.prot, self.msg)


@dataclass(frozen=True)
class Chan:
    send: int
    recv: int
    trace: int
    lock: Optional[LockRef] = None
    trace_pcm: Pcm = TRACE_PCM

    def __repr__(self) -> str:
        return f"Chan({self.send}, {self.recv}, {self.trace})"


def _inv_ok(vs: Any, vr: Any, h: Hist) -> bool:
    if not (isinstance(vs, ChanVal) and isinstance(vr, ChanVal) and h.entries):
        return False
    if h.last.end != vr.after:
        return False
    if vs.ctr == vr.ctr:
        return vs == vr
    return vs.ctr == vr.ctr + 1 and vs.prot == vr.after


def chan_inv(c: Chan) -> SlProp:
    """The halves not held by the endpoints, the whole trace, and their agreement."""
    return Exists("vs", payload_at(c.send), lambda vs: Exists("vr", payload_at(c.recv), lambda vr: Exists(
        "h", hist_at(c.trace), lambda h: star(
            pts_to(c.send, vs, HALF), pts_to(c.recv, vr, HALF),
            PtsTo(c.trace, c.trace_pcm, FracHist(ONE, h)),
            pure(_inv_ok(vs, vr, h), "chan_inv")))))


def _endpoint(addr: int, p: Protocol, who: str) -> SlProp:
    return Exists("v", payload_at(addr), lambda v: star(
        pts_to(addr, v, HALF), pure(isinstance(v, ChanVal) and v.after == p, f"{who}@state")))


def sender(c: Chan, p: Protocol) -> SlProp:
    return _endpoint(c.send, p, "sender")


def receiver(c: Chan, p: Protocol) -> SlProp:
    return _endpoint(c.recv, p, "receiver")


def chan_lock(c: Chan) -> Lock:
    return lock_of(c.lock, chan_inv(c))


@dataclass(frozen=True)
class _BothEnds:
    i: Protocol

    def __call__(self, c: Chan) -> SlProp:
        return star(sender(c, self.i), receiver(c, self.i))


def new_chan(i: Protocol) -> CTree:
    """A fresh channel for protocol ``i``; the caller gets both endpoints."""
    if not more(i):
        raise ProtocolError("a channel needs a protocol that sends at least one message")
    init = ChanVal(sentinel(i), (), 0)
    ends = _BothEnds(i)
    tr0 = FracHist(ONE, history(TRACE_ORDER, [waiting(i)]))

    def with_refs(s: int, r: int, t: int) -> CTree:
        c = Chan(s, r, t)
        inv = chan_inv(c)
        return bind(frame(new_lock(inv), ends(c)),
                    lambda l: ret(replace(c, lock=l.handle()), ends), ends)

    return bind(act(alloc(init, type_tag="chan")), lambda s: bind(
        act(alloc(init, type_tag="chan")), lambda r: bind(
            act(ghost_alloc(tr0, pcm=TRACE_PCM, type_tag="trace")), lambda t: with_refs(s, r, t), ends),
        ends), ends)


def _peek(c: Chan, k: Any) -> CTree:
    """Read both endpoint cells (half each) and pass the payloads to ``k``."""
    return bind(act(read(c.send, perm=HALF)),
                lambda fs: bind(act(read(c.recv, perm=HALF)), lambda fr: k(fs.value, fr.value)))


def send(c: Chan, cur: Protocol, x: Any) -> CTree:
    """Send ``x`` in state ``cur``; waits until the receiver has caught up."""
    nxt = proto_step(cur, x)
    lk = chan_lock(c)
    done = ConstPost(sender(c, nxt))

    def decide(vs: ChanVal, vr: ChanVal) -> CTree:
        if vs.ctr == vr.ctr:
            new = ChanVal(cur, x, vs.ctr + 1)
            return bind(act(write(c.send, Frac(vs), Frac(new))),
                        lambda _: bind(frame(release(lk), sender(c, nxt)), lambda _: ret((), done), done), done)
        return bind(frame(release(lk), sender(c, cur)), lambda _: send(c, cur, x), done)

    return bind(frame(acquire(lk), sender(c, cur)), lambda _: _peek(c, decide), done)


def _extend_trace_action(c: Chan, m: Any) -> Action:
    def body(rs: RunState, uses: frozenset) -> tuple:
        cell = rs.mem.cell(c.trace)
        h = cell.value.hist
        t = extend_1(h.last, m)
        if not trace_extends(h.last, t):
            raise CheckViolation("preorder", "trace update does not extend the trace")
        new = FracHist(ONE, Hist(h.entries + (t,), h.order))
        return t, put_checked(rs, rs.mem.set_cell(c.trace, cell.with_value(new)))

    pre = _trace_owned(c)
    return Action(f"extend_trace({c.trace}, {m!r})", pre, ConstPost(pre), body, ghost=True)


def _trace_owned(c: Chan) -> SlProp:
    return Exists("h", hist_at(c.trace), lambda h: PtsTo(c.trace, c.trace_pcm, FracHist(ONE, h)))


@dataclass(frozen=True)
class _RecvPost:
    c: Chan
    cur: Protocol

    def __call__(self, m: Any) -> SlProp:
        return receiver(self.c, proto_step(self.cur, m))


def recv(c: Chan, cur: Protocol) -> CTree:
    """Wait for the next message in state ``cur``; the trace records it."""
    lk = chan_lock(c)
    post = _RecvPost(c, cur)

    def decide(vs: ChanVal, vr: ChanVal) -> CTree:
        if vs.ctr == vr.ctr:
            return bind(frame(release(lk), receiver(c, cur)), lambda _: recv(c, cur), post)
        m = vs.msg
        nxt = receiver(c, proto_step(cur, m))
        return bind(act(write(c.recv, Frac(vr), Frac(vs))), lambda _: bind(
            act(_extend_trace_action(c, m)), lambda _: bind(
                frame(release(lk), nxt), lambda _: ret(m, post), post), post), post)

    return bind(frame(acquire(lk), receiver(c, cur)), lambda _: _peek(c, decide), post)


# ---------------------------------------------------------------------------
# Trace observations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class History:
    """``history c t``: the channel's trace has been seen to extend ``t``.  Pure, duplicable."""

    trace_addr: int
    trace: Trace
    wid: int


@dataclass(frozen=True)
class _AtLeast:
    addr: int
    t: Trace

    def __call__(self, m: Any) -> bool:
        cell = m.cell(self.addr)
        if cell is None or not isinstance(cell.value, FracHist) or not cell.value.hist.entries:
            return False
        return trace_extends(self.t, cell.value.hist.last)


def _observe_action(c: Chan, prev: Optional[History], cur: Optional[Protocol]) -> Action:
    def body(rs: RunState, uses: frozenset) -> tuple:
        if prev is not None:
            rs = recall(rs, prev.wid)
        t = rs.mem.cell(c.trace).value.hist.last
        if prev is not None and not trace_extends(prev.trace, t):
            raise CheckViolation("trace", f"{t!r} does not extend {prev.trace!r}")
        if cur is not None and t.end != cur:
            raise CheckViolation("trace", f"trace {t!r} does not end at the receiver's state")
        rec, rs = witness(rs, _AtLeast(c.trace, t), f"history({c.trace}, {list(t.messages)})")
        return History(c.trace, t, rec.id), rs

    pre = _trace_owned(c)
    return Action(f"observe_trace({c.trace})", pre, ConstPost(pre), body, ghost=True)


def get_trace(c: Chan) -> CTree:
    """Observe the current trace; returns a :class:`History` token."""
    lk = chan_lock(c)
    return bind(acquire(lk), lambda _: bind(act(_observe_action(c, None, None)),
                                            lambda h: bind(release(lk), lambda _: ret(h))))


def extend_trace(c: Chan, cur: Protocol, prev: History) -> CTree:
    """Re-observe the trace, which must extend ``prev`` and end at the receiver state ``cur``."""
    lk = chan_lock(c)
    mine = receiver(c, cur)
    keep = ConstPost(mine)
    return bind(frame(acquire(lk), mine), lambda _: bind(
        act(_observe_action(c, prev, cur)),
        lambda h: bind(frame(release(lk), mine), lambda _: ret(h, keep), keep), keep), keep)


def history_dup(h: History) -> tuple:
    return h, h


def final_trace(c: Chan, m: Any) -> Trace:
    """Read the trace straight out of a memory (for end-of-run checks)."""
    return m.cell(c.trace).value.hist.last
