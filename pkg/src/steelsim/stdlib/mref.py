"""Monotonic references: a fractional history cell whose updates respect a preorder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional

from ..algebra import Pcm, Preorder, frac_hist, history
from ..errors import CheckViolation, ConstructionError
from ..slprop import Exists, PtsTo, SlProp, Star, hist_at, pure
from ..substrate import RunState, put_checked, recall, witness
from ..semantics.actions import Action, alloc
from ..semantics.ctree import ConstPost, CTree, act, bind, ret
from ..values import ONE, FracHist, Hist, show


@dataclass(frozen=True)
class MRef:
    addr: int
    q: Preorder
    pcm: Pcm


@dataclass(frozen=True)
class Observed:
    """Token for ``observed(r, f)``; a pure, duplicable fact backed by a witness."""

    addr: int
    wid: int
    label: str


def owned(r: MRef) -> SlProp:
    """``r`` at full permission with whatever history it holds."""
    return Exists("h", hist_at(r.addr), lambda h: PtsTo(r.addr, r.pcm, FracHist(ONE, h)))


@dataclass(frozen=True)
class _LastIs:
    r: MRef
    v: Any

    def __call__(self, _x: Any) -> SlProp:
        r, v = self.r, self.v
        return Exists("h", hist_at(r.addr),
                      lambda h: Star(PtsTo(r.addr, r.pcm, FracHist(ONE, h)),
                                     pure(bool(h.entries) and h.last == v, f"last={show(v)}")))


@dataclass(frozen=True)
class _Wrap:
    q: Preorder
    pcm: Pcm

    def __call__(self, a: int) -> CTree:
        return ret(MRef(a, self.q, self.pcm), lambda r: owned(r))


def new_mref(q: Preorder, v: Any, extend_candidates: Optional[Callable[[Any], Iterable[Any]]] = None,
             ghost: bool = False) -> CTree:
    pcm = frac_hist(q, extend_candidates)
    a = alloc(FracHist(ONE, history(q, [v])), pcm=pcm, type_tag="mref", ghost=ghost)
    return bind(act(a), _Wrap(q, pcm), lambda r: owned(r))


def read_mref_action(r: MRef, ghost: bool = False) -> Action:
    def body(rs: RunState, uses: frozenset) -> tuple:
        return rs.mem.cell(r.addr).value.hist.last, rs

    pre = owned(r)
    return Action(f"read_mref({r.addr})", pre, ConstPost(pre), body, ghost=ghost)


def read_mref(r: MRef) -> CTree:
    """The current value, which is the last history entry."""
    return act(read_mref_action(r))


def write_mref_action(r: MRef, v: Any, v0: Any = None, ghost: bool = False) -> Action:
    if v0 is not None and not r.q(v0, v):
        raise ConstructionError(f"mref write {show(v0)} -> {show(v)} violates {r.q.id}")

    def body(rs: RunState, uses: frozenset) -> tuple:
        c = rs.mem.cell(r.addr)
        if c.erased and not ghost:
            raise CheckViolation("ghost", f"concrete write to ghost mref {r.addr}")
        h = c.value.hist
        if not r.q(h.last, v):
            raise CheckViolation("preorder", f"mref {r.addr}: {show(h.last)} -> {show(v)} violates {r.q.id}")
        new = FracHist(ONE, Hist(h.entries + (v,), h.order))
        return (), put_checked(rs, rs.mem.set_cell(r.addr, c.with_value(new)))

    name = f"{'ghost_' if ghost else ''}write_mref({r.addr}, {show(v)})"
    return Action(name, owned(r), _LastIs(r, v), body, ghost=ghost)


def write_mref(r: MRef, v: Any, v0: Any = None) -> CTree:
    return act(write_mref_action(r, v, v0))


@dataclass(frozen=True)
class _Lift:
    """``f`` applied to the most recent value at ``addr``."""

    addr: int
    f: Callable[[Any], bool]

    def __call__(self, m: Any) -> bool:
        c = m.cell(self.addr)
        if c is None or not isinstance(c.value, FracHist) or not c.value.hist.entries:
            return False
        return bool(self.f(c.value.hist.last))


def witness_mref_action(r: MRef, f: Callable[[Any], bool], label: str = "") -> Action:
    label = label or getattr(f, "__name__", "f")

    def body(rs: RunState, uses: frozenset) -> tuple:
        rec, rs = witness(rs, _Lift(r.addr, f), f"observed({r.addr}, {label})")
        return Observed(r.addr, rec.id, label), rs

    pre = owned(r)
    return Action(f"witness_mref({r.addr}, {label})", pre, ConstPost(pre), body, ghost=True)


def witness_mref(r: MRef, f: Callable[[Any], bool], label: str = "") -> CTree:
    return act(witness_mref_action(r, f, label))


def recall_mref_action(tok: Observed) -> Action:
    def body(rs: RunState, uses: frozenset) -> tuple:
        return (), recall(rs, tok.wid)

    return Action(f"recall_mref({tok.addr}, {tok.label})", pure(True), ConstPost(pure(True)), body, ghost=True)


def recall_mref(tok: Observed) -> CTree:
    return act(recall_mref_action(tok))
