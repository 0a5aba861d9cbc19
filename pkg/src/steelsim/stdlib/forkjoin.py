"""Fork/join built from a lock guarding a completion bit."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from ..slprop import EMP, Exists, SlProp, Star, pts_to
from ..semantics.actions import alloc, free, read, write_frac
from ..semantics.ctree import ConstPost, CTree, act, bind, frame, par, ret
from ..values import Frac
from .locks import BOOL, Lock, acquire, new_lock, release


@dataclass(frozen=True)
class _ThreadBody:
    r: int
    q: SlProp

    def __call__(self, b: bool) -> SlProp:
        return Star(pts_to(self.r, b), self.q) if b else pts_to(self.r, b)


def thread_inv(r: int, q: SlProp) -> SlProp:
    """The completion bit, and ``q`` once it is set."""
    return Exists("b", BOOL, _ThreadBody(r, q))


@dataclass(frozen=True)
class ThreadHandle:
    ref: int
    lock: Lock
    q: SlProp


@dataclass(frozen=True)
class _Handle:
    r: int
    q: SlProp

    def __call__(self, l: Lock) -> CTree:
        return ret(ThreadHandle(self.r, l, self.q))


@dataclass(frozen=True)
class _GuardBit:
    q: SlProp

    def __call__(self, r: int) -> CTree:
        return bind(new_lock(thread_inv(r, self.q)), _Handle(r, self.q))


def new_thread(q: SlProp) -> CTree:
    return bind(act(alloc(False, type_tag="thread")), _GuardBit(q))


def _then(*steps: Callable[[Any], CTree]) -> Callable[[Any], CTree]:
    def k(_x: Any) -> CTree:
        head = steps[0](None)
        return head if len(steps) == 1 else bind(head, _then(*steps[1:]))

    return k


def _child(t: ThreadHandle, f: CTree, p: SlProp) -> CTree:
    inv = t.lock.protected
    return bind(frame(acquire(t.lock), p), _then(
        lambda _: frame(f, inv),
        lambda _: act(read(t.ref)),
        lambda _: frame(act(write_frac(t.ref, False, True)), t.q),
        lambda _: release(t.lock),
    ))


def fork(f: CTree, g: Callable[[ThreadHandle], CTree], p: SlProp = EMP, q: SlProp | None = None,
         r: SlProp = EMP) -> CTree:
    """Run ``f`` (pre ``p``, post ``q``) beside ``g(t)`` (pre ``r``); ``join t`` hands ``q`` over."""
    q = f.post(()) if q is None else q
    return bind(frame(new_thread(q), Star(p, r)), lambda t: par(_child(t, f, p), g(t)))


@dataclass(frozen=True)
class _Joined:
    t: ThreadHandle

    def __call__(self, v: Frac) -> CTree:
        t = self.t
        if v.value:
            return bind(act(free(t.ref, Frac(True))), _Gain(t.q), ConstPost(t.q))
        return bind(release(t.lock), lambda _: join(t), ConstPost(t.q))


@dataclass(frozen=True)
class _Gain:
    q: SlProp

    def __call__(self, _x: Any) -> CTree:
        return ret((), ConstPost(self.q))


def join(t: ThreadHandle) -> CTree:
    """Wait for the child: spin on the handle lock until its bit is set, then take ``q``."""
    return bind(acquire(t.lock), lambda _: bind(act(read(t.ref)), _Joined(t), ConstPost(t.q)),
                ConstPost(t.q))
