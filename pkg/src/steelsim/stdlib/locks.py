"""Spin locks over a boolean cell, plus a ghost in-critical flag for auditing them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from ..errors import CheckViolation
from ..slprop import EMP, Exists, FiniteDomain, Or, SlProp, Star, pts_to
from ..substrate import RunState, put_checked
from ..semantics.actions import (
    Action,
    IVal,
    alloc,
    any_pts_to,
    cas,
    compose_atomic,
    ghost_alloc,
    ghost_read,
    new_invariant,
    with_invariant,
)
from ..semantics.ctree import ConstPost, CTree, act, bind, frame, ret
from ..values import Erased, Frac, reveal

AVAILABLE = False
LOCKED = True
BOOL = FiniteDomain("bool", (False, True))


def lockinv(r: int, p: SlProp) -> SlProp:
    return Or(Star(pts_to(r, AVAILABLE), p), pts_to(r, LOCKED))


@dataclass(frozen=True)
class LockRef:
    """Storable lock handle: no slprop inside, so it may live in a heap cell."""

    ref: int
    inv_name: int
    wid: int


@dataclass(frozen=True)
class Lock:
    ref: int
    inv: IVal
    protected: SlProp

    def handle(self) -> LockRef:
        return LockRef(self.ref, self.inv.name, self.inv.wid)


def lock_of(h: LockRef, protected: SlProp) -> Lock:
    return Lock(h.ref, IVal(h.inv_name, lockinv(h.ref, protected), h.wid), protected)


@dataclass(frozen=True)
class _MkLock:
    r: int
    p: SlProp

    def __call__(self, i: IVal) -> CTree:
        return ret(Lock(self.r, i, self.p))


@dataclass(frozen=True)
class _NewInv:
    p: SlProp

    def __call__(self, r: int) -> CTree:
        return bind(act(new_invariant(lockinv(r, self.p), "lockinv")), _MkLock(r, self.p))


def new_lock(p: SlProp) -> CTree:
    """Allocate an available lock and move ``p`` into its invariant."""
    return bind(frame(act(alloc(AVAILABLE, type_tag="lock")), p), _NewInv(p))


@dataclass(frozen=True)
class _Flip:
    r: int
    old: bool
    new: bool

    def __call__(self, v: Any) -> Action:
        return cas(self.r, self.old, self.new, Erased(reveal(v).value))


@dataclass(frozen=True)
class _IfPost:
    yes: SlProp
    no: SlProp

    def __call__(self, b: bool) -> SlProp:
        return self.yes if b else self.no


def _flip(l: Lock, old: bool, new: bool, pre: SlProp, post: Any, name: str) -> Action:
    inner = compose_atomic(ghost_read(l.ref), _Flip(l.ref, old, new), ghost2=False,
                           post=ConstPost(pts_to(l.ref, new)), name=f"{name}.cas")
    return with_invariant(l.inv, inner, pre=pre, post=post, name=f"{name}({l.ref})")


def acquire_step(l: Lock) -> Action:
    """One cas attempt; on success the caller gains the protected resource."""
    return _flip(l, AVAILABLE, LOCKED, EMP, _IfPost(l.protected, EMP), "acquire")


def release_step(l: Lock) -> Action:
    return _flip(l, LOCKED, AVAILABLE, l.protected, ConstPost(EMP), "release")


@dataclass(frozen=True)
class _Retry:
    l: Lock

    def __call__(self, b: bool) -> CTree:
        return ret((), ConstPost(self.l.protected)) if b else acquire(self.l)


def acquire(l: Lock) -> CTree:
    """Spin until the cas from available to locked succeeds."""
    return bind(act(acquire_step(l)), _Retry(l), ConstPost(l.protected))


def release(l: Lock) -> CTree:
    return bind(act(release_step(l)), _Done())


@dataclass(frozen=True)
class _Done:
    def __call__(self, _x: Any) -> CTree:
        return ret(())


# ---------------------------------------------------------------------------
# Ghost in-critical flag
# ---------------------------------------------------------------------------


def flag_inv(g: int) -> SlProp:
    return Exists("b", BOOL, lambda b: pts_to(g, b))


@dataclass(frozen=True)
class CriticalFlag:
    ref: int
    inv: IVal


@dataclass(frozen=True)
class _MkFlag:
    g: int

    def __call__(self, i: IVal) -> CTree:
        return ret(CriticalFlag(self.g, i))


@dataclass(frozen=True)
class _FlagInv:
    def __call__(self, g: int) -> CTree:
        return bind(act(new_invariant(flag_inv(g), "critical")), _MkFlag(g))


def new_critical_flag() -> CTree:
    return bind(act(ghost_alloc(False, type_tag="flag")), _FlagInv())


def _set_flag(flag: CriticalFlag, entering: bool) -> Action:
    g = flag.ref

    def body(rs: RunState, uses: frozenset) -> tuple:
        c = rs.mem.cell(g)
        if entering and c.value.value:
            raise CheckViolation("mutual-exclusion", f"critical flag {g} set twice")
        return (), put_checked(rs, rs.mem.set_cell(g, c.with_value(Frac(entering))))

    name = "enter_critical" if entering else "exit_critical"
    inner = Action(name, any_pts_to(g), ConstPost(pts_to(g, entering)), body, ghost=True)
    return with_invariant(flag.inv, inner, name=f"{name}({g})")


def enter_critical(flag: CriticalFlag) -> CTree:
    return act(_set_flag(flag, True))


def exit_critical(flag: CriticalFlag) -> CTree:
    return act(_set_flag(flag, False))
