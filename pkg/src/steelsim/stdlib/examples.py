"""Small constructions: a counter with hidden state and the lock-coupling list invariant."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from ..slprop import EMP, Exists, SlProp, payload_at, pure, pts_to, star
from ..semantics.actions import alloc, read_frac, write_frac
from ..semantics.ctree import CTree, act, bind, ret
from ..values import fingerprint
from .locks import LockRef, lockinv


# ---------------------------------------------------------------------------
# Counter: a closure paired with an abstract invariant indexed by its value
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Counter:
    p: Callable[[int], SlProp]
    incr: Callable[[int], CTree]


@dataclass(frozen=True)
class _CtrInv:
    r: int

    def __call__(self, n: int) -> SlProp:
        return pts_to(self.r, n)


@dataclass(frozen=True)
class _Incr:
    r: int

    def __call__(self, x: int) -> CTree:
        """Expects ``p x``; returns ``x + 1`` and restores ``p`` at the result."""
        r, inv = self.r, _CtrInv(self.r)
        return bind(act(read_frac(r, x)),
                    lambda v: bind(act(write_frac(r, v, v + 1)), lambda _: ret(v + 1, inv), inv),
                    inv)


@dataclass(frozen=True)
class _MkCounter:
    def __call__(self, r: int) -> CTree:
        c = Counter(_CtrInv(r), _Incr(r))
        return ret(c, lambda c: c.p(0))


def new_ctr() -> CTree:
    return bind(act(alloc(0, type_tag="ctr")), _MkCounter(), lambda c: c.p(0))


# ---------------------------------------------------------------------------
# Lock-coupling list invariant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LLNode:
    v: Any
    next: int
    lock: LockRef


@dataclass(eq=False)
class IStoreView:
    """The istore an assertion is checked against.

    Lock invariants mention the list invariant, which mentions this view, so
    its fingerprint is a constant to keep structural comparison finite.
    """

    entries: tuple = field(default=())

    def __fingerprint__(self) -> Any:
        return ("istore-view",)


def protects(l: LockRef, p: SlProp, view: IStoreView) -> bool:
    """``l``'s invariant is ``lockinv(l.ref, p)`` (compared structurally)."""
    if not 0 <= l.inv_name < len(view.entries):
        return False
    return fingerprint(view.entries[l.inv_name]) == fingerprint(lockinv(l.ref, p))


@dataclass(frozen=True)
class _NodeBody:
    p: Callable[[Any], SlProp]
    tl: tuple
    n: int
    view: IStoreView

    def __call__(self, c: Any) -> SlProp:
        if not isinstance(c, LLNode):
            return pure(False, "not a node")
        tail = llist_inv(self.tl, c.next, self.view)
        return star(self.p(c.v), pts_to(self.n, c),
                    pure(lambda: protects(c.lock, tail, self.view), f"protects({c.lock.ref})"))


def llist_inv(repr: Sequence[Callable[[Any], SlProp]], n: int, view: IStoreView) -> SlProp:
    """Ownership of the head node at ``n``; its lock protects the invariant of the tail."""
    repr = tuple(repr)
    if not repr:
        return EMP
    return Exists("c", payload_at(n), _NodeBody(repr[0], repr[1:], n, view))
