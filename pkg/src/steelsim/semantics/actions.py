"""Atomic actions: primitives, invariants, and the atomic-composition rules.

An :class:`Action` body maps ``(RunState, uses)`` to ``(value, RunState)``.
``uses`` is the set of invariant names already open in the enclosing atomic
context; the invariants *not* in ``uses`` must hold around the action.  A
primitive is polymorphic in ``uses`` (it receives it at execution time),
which is how the paper's uses-indexed atomic types are realised dynamically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from pyrsistent import pmap

from ..algebra import Pcm, exclusive, frac_pcm, frame_preserving
from ..errors import CheckViolation, CompositionError, ConstructionError, DoubleOpenError
from ..memory import Cell, Mem, fresh_addr
from ..slprop import EMP, Exists, SlProp, Star, interp, payload_at, pretty, pts_to, PtsTo, explain
from ..substrate import RunState, put_checked, recall, witness
from ..values import Erased, Frac, reveal, show
from .ctree import ConstPost, emp_post

MAX_ATOMIC_BUDGET = 16


@dataclass(frozen=True, eq=False)
class Action:
    name: str
    pre: SlProp
    post: Callable[[Any], SlProp]
    body: Callable[[RunState, frozenset], tuple]
    ghost: bool = False
    uses: frozenset = frozenset()
    opened: frozenset = frozenset()
    step_budget: int = 1

    def __repr__(self) -> str:
        g = " ghost" if self.ghost else ""
        return f"Action({self.name}{g})"


@dataclass(frozen=True)
class IVal:
    """An allocated invariant: its istore position and the witness pinning it there."""

    name: int
    prop: SlProp = field(compare=False)
    wid: int = 0


def istore_inv(istore: tuple, uses: frozenset = frozenset()) -> SlProp:
    """Star of every stored invariant whose name is not currently open."""
    out: SlProp = EMP
    for j in reversed(range(len(istore))):
        if j not in uses:
            out = istore[j] if out is EMP else Star(istore[j], out)
    return out


def concrete_projection(m: Mem) -> Any:
    return pmap({a: c for a, c in m.heap.items() if not c.erased})


def _fail(kind: str, a: Action, what: str, prop: SlProp, m: Mem) -> CheckViolation:
    why = explain(prop, m).reason if _explainable(prop, m) else ""
    return CheckViolation(kind, f"{a.name}: {what} does not hold ({pretty(prop)}){': ' + why if why else ''}")


def _explainable(prop: SlProp, m: Mem) -> bool:
    try:
        explain(prop, m)
        return True
    except Exception:
        return False


def execute(a: Action, rs: RunState, uses: frozenset = frozenset(), check_post: bool = True) -> tuple:
    """Run ``a`` atomically and check its contract under the invariants outside ``uses``."""
    if not a.uses <= uses:
        raise CheckViolation("uses", f"{a.name} needs invariants {sorted(a.uses)} open, only {sorted(uses)} are")
    pre = Star(istore_inv(rs.mem.istore, uses), a.pre)
    if not interp(pre, rs.mem):
        raise _fail("precondition", a, "pre", pre, rs.mem)
    before = concrete_projection(rs.mem) if a.ghost else None
    x, rs1 = a.body(rs, uses)
    if a.ghost and concrete_projection(rs1.mem) != before:
        raise CheckViolation("ghost", f"ghost action {a.name} changed concrete state")
    if check_post:
        post = Star(istore_inv(rs1.mem.istore, uses), a.post(x))
        if not interp(post, rs1.mem):
            raise _fail("postcondition", a, "post", post, rs1.mem)
    return x, rs1


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


def _cell(rs: RunState, r: int, who: str) -> Cell:
    c = rs.mem.cell(r)
    if c is None:
        raise CheckViolation("precondition", f"{who}: address {r} is not allocated")
    return c


@dataclass(frozen=True)
class _PtsPost:
    pcm: Pcm
    value: Any

    def __call__(self, r: int) -> SlProp:
        return PtsTo(r, self.pcm, self.value)


def alloc(v: Any, pcm: Optional[Pcm] = None, type_tag: str = "val", ghost: bool = False) -> Action:
    """Allocate a fresh cell holding ``v`` (a frac ``Some(v, 1)`` unless a PCM is given)."""
    if pcm is None:
        pcm, v = frac_pcm(), Frac(v)
    pcm.check_domain(v)

    def body(rs: RunState, uses: frozenset) -> tuple:
        r, m = fresh_addr(rs.mem)
        m = m.set_cell(r, Cell(type_tag, pcm, v, erased=ghost))
        return r, put_checked(rs, m)

    name = f"ghost_alloc({show(v)})" if ghost else f"alloc({show(v)})"
    return Action(name, EMP, _PtsPost(pcm, v), body, ghost=ghost)


def ghost_alloc(v: Any, pcm: Optional[Pcm] = None, type_tag: str = "ghost") -> Action:
    return alloc(v, pcm, type_tag, ghost=True)


def _any_full(r: int, p: Any = 1) -> SlProp:
    return Exists("v", payload_at(r), lambda v: pts_to(r, v, p))


def any_pts_to(r: int, p: Any = 1) -> SlProp:
    """``exists v. r |-> Some(v, p)`` with ``v`` drawn from the heap."""
    return _any_full(r, p)


def read(r: int, v0: Any = None, pcm: Optional[Pcm] = None, ghost: bool = False, perm: Any = 1) -> Action:
    """Return the stored PCM value at ``r``.

    ``v0`` is the demand; ``None`` means any frac payload at permission ``perm``.
    """
    pcm = pcm or frac_pcm()
    if v0 is None:
        pre = _any_full(r, perm)
    else:
        pcm.check_domain(v0)
        pre = PtsTo(r, pcm, v0)

    def body(rs: RunState, uses: frozenset) -> tuple:
        c = _cell(rs, r, "read")
        return (Erased(c.value) if ghost else c.value), rs

    return Action(f"{'ghost_read' if ghost else 'read'}({r})", pre, ConstPost(pre), body, ghost=ghost)


def ghost_read(r: int, v0: Any = None, pcm: Optional[Pcm] = None, perm: Any = 1) -> Action:
    return read(r, v0, pcm, ghost=True, perm=perm)


def read_frac(r: int, v: Any, p: Any = 1) -> Action:
    """Read the payload of a frac cell given ``r |-> Some(v, p)``."""
    pre = pts_to(r, v, p)

    def body(rs: RunState, uses: frozenset) -> tuple:
        return _cell(rs, r, "read").value.value, rs

    return Action(f"read({r})", pre, ConstPost(pre), body)


def _update(rs: RunState, r: int, v: Any, ghost: bool, who: str) -> RunState:
    c = _cell(rs, r, who)
    if c.erased and not ghost:
        raise CheckViolation("ghost", f"{who}: concrete write to ghost cell {r}")
    return put_checked(rs, rs.mem.set_cell(r, c.with_value(v)))


def write(r: int, v0: Any, v: Any, pcm: Optional[Pcm] = None, ghost: bool = False) -> Action:
    """Frame-preserving update of ``r`` from demand ``v0`` to ``v``; rejected at construction otherwise."""
    pcm = pcm or frac_pcm()
    pcm.check_domain(v0, v)
    if not frame_preserving(pcm, v0, v):
        raise ConstructionError(f"write {show(v0)} -> {show(v)} at {pcm.id} is not frame preserving")
    name = f"{'ghost_write' if ghost else 'write'}({r}, {show(v)})"

    def body(rs: RunState, uses: frozenset) -> tuple:
        return (), _update(rs, r, v, ghost, name)

    return Action(name, PtsTo(r, pcm, v0), ConstPost(PtsTo(r, pcm, v)), body, ghost=ghost)


def ghost_write(r: int, v0: Any, v: Any, pcm: Optional[Pcm] = None) -> Action:
    return write(r, v0, v, pcm, ghost=True)


def write_frac(r: int, v0: Any, v: Any) -> Action:
    return write(r, Frac(v0), Frac(v))


def free(r: int, v0: Any, pcm: Optional[Pcm] = None) -> Action:
    """Give up exclusive knowledge of ``r``; the cell is overwritten with the unit."""
    pcm = pcm or frac_pcm()
    pcm.check_domain(v0)
    if not exclusive(pcm, v0):
        raise ConstructionError(f"free needs exclusive knowledge; {show(v0)} at {pcm.id} is shareable")

    def body(rs: RunState, uses: frozenset) -> tuple:
        c = _cell(rs, r, "free")
        return (), put_checked(rs, rs.mem.set_cell(r, c.with_value(pcm.unit)))

    return Action(f"free({r})", PtsTo(r, pcm, v0), emp_post, body)


@dataclass(frozen=True)
class _CasPost:
    r: int
    new: Any
    old_seen: Any

    def __call__(self, b: bool) -> SlProp:
        if self.old_seen is None:
            return _any_full(self.r)
        return pts_to(self.r, self.new if b else reveal(self.old_seen))


def cas(r: int, old: Any, new: Any, v: Any = None) -> Action:
    """Compare-and-swap on a full-permission frac cell.

    ``v`` is the (erased) value the caller knows is stored; the result ``b``
    must equal ``v == old``, which is asserted on every execution.
    """
    pre = _any_full(r) if v is None else pts_to(r, reveal(v))

    def body(rs: RunState, uses: frozenset) -> tuple:
        c = _cell(rs, r, "cas")
        stored = c.value.value
        b = stored == old
        if v is not None and b != (reveal(v) == old):
            raise CheckViolation("cas-contract", f"cas({r}) returned {b} but known value is {reveal(v)!r}")
        if b:
            rs = _update(rs, r, Frac(new), False, "cas")
        return b, rs

    return Action(f"cas({r}, {old!r}, {new!r})", pre, _CasPost(r, new, v), body)


# ---------------------------------------------------------------------------
# Invariants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _InvAt:
    """Mem predicate: position ``i`` of the istore is ``prop``."""

    i: int
    prop: SlProp

    def __call__(self, m: Mem) -> bool:
        return len(m.istore) > self.i and m.istore[self.i] is self.prop


def new_invariant(p: SlProp, label: str = "") -> Action:
    """Move ``p`` from the caller's footprint into the invariant store."""

    def body(rs: RunState, uses: frozenset) -> tuple:
        i = len(rs.mem.istore)
        m = Mem(rs.mem.heap, rs.mem.ctr, rs.mem.istore + (p,))
        rs = put_checked(rs, m)
        rec, rs = witness(rs, _InvAt(i, p), f"inv_for_p[{i}]{':' + label if label else ''}")
        return IVal(i, p, rec.id), rs

    return Action(f"new_invariant({label or pretty(p)})", p, emp_post, body)


def with_invariant(i: IVal, body: Action, pre: SlProp = EMP,
                   post: Optional[Callable[[Any], SlProp]] = None, name: str = "") -> Action:
    """Open ``i`` around ``body``; it must be restored when ``body`` finishes.

    ``pre``/``post`` are the outer footprints, which exclude ``i.prop``; the
    body runs with ``i`` removed from the invariants it must preserve.
    """
    if i.name in body.opened:
        raise DoubleOpenError(f"invariant {i.name} is already opened inside {body.name}")
    post = post or emp_post

    def run(rs: RunState, uses: frozenset) -> tuple:
        if i.name in uses:
            raise CheckViolation("double-open", f"invariant {i.name} is already open")
        rs = recall(rs, i.wid)
        x, rs = execute(body, rs, uses | {i.name}, check_post=False)
        restored = Star(istore_inv(rs.mem.istore, uses), post(x))
        if not interp(restored, rs.mem):
            raise CheckViolation("invariant-restoration",
                                 f"invariant {i.name} ({pretty(i.prop)}) not restored after {body.name}")
        inner_post = Star(istore_inv(rs.mem.istore, uses | {i.name}), body.post(x))
        if not interp(inner_post, rs.mem):
            raise CheckViolation("postcondition", f"{body.name}: post does not hold ({pretty(inner_post)})")
        return x, rs

    return Action(name or f"with_invariant({i.name}, {body.name})", pre, post, run,
                  ghost=body.ghost, uses=body.uses - {i.name}, opened=body.opened | {i.name},
                  step_budget=body.step_budget)


def compose_atomic(a1: Action, a2: Callable[[Any], Action], ghost2: bool,
                   post: Optional[Callable[[Any], SlProp]] = None, pre: Optional[SlProp] = None,
                   name: str = "", budget: int = MAX_ATOMIC_BUDGET, opened2: frozenset = frozenset()) -> Action:
    """Sequence two atomic actions; at most one of them may be concrete.

    ``ghost2`` declares whether ``a2``'s actions are ghost; the declaration is
    re-checked against each action ``a2`` returns.
    """
    if not (a1.ghost or ghost2):
        raise CompositionError(f"{a1.name} and its continuation are both concrete")
    post = post or emp_post

    def run(rs: RunState, uses: frozenset) -> tuple:
        x, rs = execute(a1, rs, uses)
        second = a2(x)
        if second.ghost != ghost2:
            raise CheckViolation("ghost", f"{second.name} declared ghost={ghost2} but is ghost={second.ghost}")
        if second.uses != a1.uses:
            raise CheckViolation("uses", f"{a1.name} and {second.name} disagree on open invariants")
        if a1.step_budget + second.step_budget > budget:
            raise CheckViolation("budget", f"atomic block exceeds its step budget of {budget}")
        return execute(second, rs, uses)

    return Action(name or f"{a1.name}; <k>", a1.pre if pre is None else pre, post, run,
                  ghost=a1.ghost and ghost2, uses=a1.uses, opened=a1.opened | opened2,
                  step_budget=a1.step_budget + 1)


def noop(name: str = "noop") -> Action:
    return Action(name, EMP, emp_post, lambda rs, uses: ((), rs))
