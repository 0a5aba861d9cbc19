"""Protocols as message trees, and traces of protocol runs.

A protocol is a tree of messages: ``PMsg`` expects one message satisfying a
predicate and continues with a function of it, ``PRet`` finishes, and
``PDoWhile`` repeats a boolean-valued body.  Protocols compare structurally
(closures by code and captured values), so two protocols reached by equal
message sequences are equal.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional

from ..errors import ConstructionError
from ..values import fingerprint, show


class ProtocolError(ConstructionError):
    pass


@dataclass(frozen=True)
class MsgType:
    """A decidable message predicate with a finite hint used for enumeration."""

    label: str
    pred: Callable[[Any], bool]
    hint: tuple = ()

    def accepts(self, x: Any) -> bool:
        return bool(self.pred(x))

    def __repr__(self) -> str:
        return f"MsgType({self.label})"


class Protocol:
    __slots__ = ()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Protocol) and fingerprint(self) == fingerprint(other)

    def __hash__(self) -> int:
        return hash(fingerprint(self))


@dataclass(frozen=True, eq=False)
class PRet(Protocol):
    value: Any = ()

    def __repr__(self) -> str:
        return f"PRet({self.value!r})"


@dataclass(frozen=True, eq=False)
class PMsg(Protocol):
    msg: MsgType
    k: Callable[[Any], Protocol]

    def __repr__(self) -> str:
        return f"PMsg({self.msg.label}, ...)"


@dataclass(frozen=True, eq=False)
class PDoWhile(Protocol):
    body: Protocol
    k: Protocol

    def __post_init__(self) -> None:
        if isinstance(self.body, PRet):
            raise ProtocolError("a loop body must send at least one message")

    def __repr__(self) -> str:
        return f"PDoWhile({self.body!r}, {self.k!r})"


@dataclass(frozen=True)
class _Const:
    p: Protocol

    def __call__(self, _x: Any) -> Protocol:
        return self.p


def msg(t: MsgType, k: Callable[[Any], Protocol]) -> PMsg:
    return PMsg(t, k)


def done(v: Any = ()) -> PRet:
    return PRet(v)


def do_while(body: Protocol, k: Optional[Protocol] = None) -> PDoWhile:
    return PDoWhile(body, PRet(()) if k is None else k)


@dataclass(frozen=True)
class _BindK:
    k1: Callable[[Any], Protocol]
    k2: Callable[[Any], Protocol]

    def __call__(self, x: Any) -> Protocol:
        return proto_bind(self.k1(x), self.k2)


def proto_bind(p: Protocol, k: Callable[[Any], Protocol]) -> Protocol:
    """Graft ``k`` at every ``PRet`` leaf of ``p``."""
    if isinstance(p, PRet):
        return k(p.value)
    if isinstance(p, PMsg):
        return PMsg(p.msg, _BindK(p.k, k))
    if isinstance(p, PDoWhile):
        return PDoWhile(p.body, proto_bind(p.k, k))
    raise TypeError(f"not a protocol: {p!r}")


@dataclass(frozen=True)
class _Loop:
    loop: PDoWhile

    def __call__(self, again: Any) -> Protocol:
        return self.loop if again else self.loop.k


def hnf(p: Protocol) -> Protocol:
    """Unfold leading loops until the protocol is a ``PRet`` or a ``PMsg``."""
    while isinstance(p, PDoWhile):
        hb = hnf(p.body)
        if isinstance(hb, PRet) and hb.value:
            raise ProtocolError("loop body repeats without sending a message")
        p = proto_bind(hb, _Loop(p))
    return p


def more(p: Protocol) -> bool:
    return isinstance(hnf(p), PMsg)


ANY = MsgType("any", lambda _x: True)


def msg_t(p: Protocol) -> MsgType:
    h = hnf(p)
    return h.msg if isinstance(h, PMsg) else ANY


def proto_step(p: Protocol, x: Any) -> Protocol:
    h = hnf(p)
    if not isinstance(h, PMsg):
        raise ProtocolError("cannot step a finished protocol")
    if not h.msg.accepts(x):
        raise ProtocolError(f"message {show(x)} is not a {h.msg.label}")
    return h.k(x)


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trace:
    """Messages exchanged so far, from ``start`` to ``end``.

    Build with :func:`waiting`, :func:`extend_1` or :func:`trace_of`, which
    keep ``end`` equal to the fold of :func:`proto_step` over ``messages``.
    """

    start: Protocol
    messages: tuple
    end: Protocol

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Trace) and self.messages == other.messages
                and self.start == other.start)

    def __hash__(self) -> int:
        return hash((self.messages, fingerprint(self.start)))

    def __fingerprint__(self) -> Any:
        return ("trace", fingerprint(self.start), fingerprint(self.messages))

    def __repr__(self) -> str:
        return f"Trace{list(self.messages)!r}"

    def to_dict(self, protocol_id: str = "") -> dict:
        return {
            "protocol_id": protocol_id or digest(self.start)[:8],
            "messages": list(self.messages),
            "end_state_fingerprint": digest(self.end),
        }


def digest(p: Protocol) -> str:
    """Process-independent short hash of a protocol's structure."""
    return hashlib.sha256(repr(fingerprint(p)).encode()).hexdigest()[:16]


def waiting(p: Protocol) -> Trace:
    return Trace(p, (), p)


def extend_1(t: Trace, m: Any) -> Trace:
    if not more(t.end):
        raise ProtocolError("trace is already complete")
    return Trace(t.start, t.messages + (m,), proto_step(t.end, m))


def trace_of(p: Protocol, messages: Iterable[Any]) -> Trace:
    t = waiting(p)
    for m in messages:
        t = extend_1(t, m)
    return t


def trace_extends(t0: Trace, t1: Trace) -> bool:
    """``t0 ~> t1``: same start and ``t0``'s messages are a prefix of ``t1``'s."""
    n = len(t0.messages)
    return t0.start == t1.start and t1.messages[:n] == t0.messages


def is_next(t0: Trace, t1: Trace) -> bool:
    """One-message extension, the relation whose closure is ``~>``."""
    if not more(t0.end) or len(t1.messages) != len(t0.messages) + 1:
        return False
    try:
        return extend_1(t0, t1.messages[-1]) == t1
    except ProtocolError:
        return False


def traces_upto(p: Protocol, n: int, domain: Optional[Iterable[Any]] = None) -> list:
    """Every valid trace of ``p`` with at most ``n`` messages, messages drawn from the hints."""
    out = [waiting(p)]
    frontier = list(out)
    for _ in range(n):
        nxt = []
        for t in frontier:
            if not more(t.end):
                continue
            mt = msg_t(t.end)
            for m in (domain if domain is not None else mt.hint):
                if mt.accepts(m):
                    nxt.append(extend_1(t, m))
        out.extend(nxt)
        frontier = nxt
    return out


def closure_extends(t0: Trace, t1: Trace, universe: Iterable[Trace]) -> bool:
    """Reflexive-transitive closure of :func:`is_next`, searched within ``universe``."""
    universe = list(universe)
    seen = [t0]
    frontier = [t0]
    if t0 == t1:
        return True
    while frontier:
        nxt = []
        for a in frontier:
            for b in universe:
                if b not in seen and is_next(a, b):
                    if b == t1:
                        return True
                    seen.append(b)
                    nxt.append(b)
        frontier = nxt
    return False


# ---------------------------------------------------------------------------
# Sample protocols
# ---------------------------------------------------------------------------

INT = MsgType("int", lambda x: isinstance(x, int) and not isinstance(x, bool), (0, 1, 17))
UNIT = MsgType("unit", lambda x: x == ())


@dataclass(frozen=True)
class _Succ:
    x: int

    def __call__(self, y: Any) -> bool:
        return y == self.x + 1


@dataclass(frozen=True)
class _XyTail:
    def __call__(self, x: int) -> Protocol:
        return PMsg(MsgType(f"={x + 1}", _Succ(x), (x + 1,)), _Const(PRet(())))


def xy() -> Protocol:
    """Send an int ``x``, then exactly ``x + 1``."""
    return PMsg(INT, _XyTail())


def xy_loop() -> Protocol:
    """``xy`` forever."""
    return do_while(proto_bind(xy(), _Const(PRet(True))))


def sentinel(i: Protocol) -> PMsg:
    """A pre-start state whose only step, on ``()``, yields ``i``."""
    return PMsg(UNIT, _Const(i))
