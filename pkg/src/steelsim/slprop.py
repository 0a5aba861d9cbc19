"""Separation-logic assertions as inspectable trees.

Two interpreters live here.  :func:`interp` normalizes to disjunctive clauses
and sums points-to demands per address (:func:`sat_check`); it is what the
runtime checker uses.  :func:`interp_naive` follows the splitting semantics
of ``*`` directly by enumerating heap splits and serves as the oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Iterator, Optional, Sequence

from pyrsistent import PMap, pmap

from .algebra import Pcm, frac_pcm, pcm_le
from .errors import FragmentError, PcmError
from .values import Frac, show


class SlProp:
    __slots__ = ()

    def __mul__(self, other: "SlProp") -> "SlProp":
        return Star(self, other)

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True, eq=False, repr=False)
class Emp(SlProp):
    pass


@dataclass(frozen=True, eq=False, repr=False)
class Pure(SlProp):
    fact: Any
    label: str = ""

    def holds(self) -> bool:
        return bool(self.fact() if callable(self.fact) else self.fact)


@dataclass(frozen=True, eq=False, repr=False)
class PtsTo(SlProp):
    addr: Any
    pcm: Pcm
    demand: Any


@dataclass(frozen=True, eq=False, repr=False)
class Star(SlProp):
    left: SlProp
    right: SlProp


@dataclass(frozen=True, eq=False, repr=False)
class Wand(SlProp):
    left: SlProp
    right: SlProp


@dataclass(frozen=True, eq=False, repr=False)
class And(SlProp):
    left: SlProp
    right: SlProp


@dataclass(frozen=True, eq=False, repr=False)
class Or(SlProp):
    left: SlProp
    right: SlProp


@dataclass(frozen=True, eq=False, repr=False)
class Exists(SlProp):
    label: str
    domain: Any
    body: Callable[[Any], SlProp]


@dataclass(frozen=True, eq=False, repr=False)
class Forall(SlProp):
    label: str
    domain: Any
    body: Callable[[Any], SlProp]


EMP = Emp()


def star(*ps: SlProp) -> SlProp:
    ps = [p for p in ps if not isinstance(p, Emp)]
    if not ps:
        return EMP
    out = ps[-1]
    for p in reversed(ps[:-1]):
        out = Star(p, out)
    return out


def pure(fact: Any, label: str = "") -> Pure:
    return Pure(fact, label)


def pts_to(r: int, v: Any, p: Optional[Any] = None, pcm: Optional[Pcm] = None) -> PtsTo:
    """``r |-> Some(v, p)`` in the frac PCM, or ``r |-> v`` at ``pcm`` when one is given."""
    if pcm is not None:
        return PtsTo(r, pcm, v)
    return PtsTo(r, frac_pcm(), Frac(v) if p is None else Frac(v, p))


# ---------------------------------------------------------------------------
# Quantifier domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteDomain:
    label: str
    values: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ValueError(f"domain {self.label} is empty")

    def resolve(self, heap: Optional[PMap]) -> tuple:
        return self.values


@dataclass(frozen=True, eq=False)
class HeapDomain:
    """Witness candidates read off the heap being checked (plus optional extras)."""

    label: str
    fn: Callable[[PMap], Iterable[Any]]
    extra: tuple = ()

    def resolve(self, heap: Optional[PMap]) -> tuple:
        if heap is None:
            raise FragmentError(f"heap-derived domain {self.label} needs a heap")
        return tuple(dict.fromkeys(itertools.chain(self.extra, self.fn(heap))))


def _stored(heap: PMap, addr: int) -> Any:
    c = heap.get(addr)
    return None if c is None else c.value


def payload_at(addr: int, extra: tuple = ()) -> HeapDomain:
    """Payloads of the frac value stored at ``addr``."""

    def fn(heap: PMap) -> Iterator[Any]:
        v = _stored(heap, addr)
        if isinstance(v, Frac):
            yield v.value

    return HeapDomain(f"payload@{addr}", fn, tuple(extra))


def stored_at(addr: int) -> HeapDomain:
    return HeapDomain(f"stored@{addr}", lambda heap: [_stored(heap, addr)])


def hist_at(addr: int) -> HeapDomain:
    """Histories held at a frac-history cell."""

    def fn(heap: PMap) -> Iterator[Any]:
        v = _stored(heap, addr)
        if v is not None and hasattr(v, "hist"):
            yield v.hist

    return HeapDomain(f"hist@{addr}", fn)


def _resolve(domain: Any, heap: Optional[PMap]) -> tuple:
    if isinstance(domain, (FiniteDomain, HeapDomain)):
        return domain.resolve(heap)
    return tuple(domain)


# ---------------------------------------------------------------------------
# Normal form and demand-summing satisfiability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Clause:
    bindings: tuple = ()
    atoms: tuple = ()
    pures: tuple = ()

    def __mul__(self, other: "Clause") -> "Clause":
        return Clause(self.bindings + other.bindings, self.atoms + other.atoms,
                      self.pures + other.pures)


def normalize(p: SlProp, heap: Optional[PMap] = None) -> list:
    """Disjunction of clauses interp-equivalent to ``p``.

    Heap-derived existential domains are resolved against ``heap``.
    """
    if isinstance(p, Emp):
        return [Clause()]
    if isinstance(p, Pure):
        return [Clause(pures=(p,))]
    if isinstance(p, PtsTo):
        return [Clause(atoms=(p,))]
    if isinstance(p, Star):
        return [a * b for a in normalize(p.left, heap) for b in normalize(p.right, heap)]
    if isinstance(p, Or):
        return normalize(p.left, heap) + normalize(p.right, heap)
    if isinstance(p, And):
        left, right = normalize(p.left, heap), normalize(p.right, heap)
        if not all(not c.atoms for c in left) and not all(not c.atoms for c in right):
            raise FragmentError("conjunction is only checkable when one side is pure")
        return [a * b for a in left for b in right]
    if isinstance(p, Exists):
        out = []
        for v in _resolve(p.domain, heap):
            out.extend(Clause(((p.label, v),) + c.bindings, c.atoms, c.pures)
                       for c in normalize(p.body(v), heap))
        return out
    if isinstance(p, (Wand, Forall)):
        raise FragmentError(f"{type(p).__name__} is outside the checkable fragment")
    raise TypeError(f"not an slprop: {p!r}")


@dataclass(frozen=True)
class SatResult:
    ok: bool
    clause: Optional[Clause] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    @property
    def witness(self) -> dict:
        return dict(self.clause.bindings) if self.clause else {}


def check_clause(c: Clause, heap: PMap) -> Optional[str]:
    """``None`` if the clause holds on ``heap``; otherwise why not."""
    for pu in c.pures:
        if not pu.holds():
            return f"pure fact {pu.label or '?'} is false"
    demands: dict = {}
    for a in c.atoms:
        if not isinstance(a.addr, int) or isinstance(a.addr, bool):
            raise FragmentError(f"unknown address symbol {a.addr!r}")
        demands.setdefault(a.addr, []).append(a)
    for addr, atoms in demands.items():
        cell = heap.get(addr)
        if cell is None:
            return f"address {addr} is not allocated"
        pcm = cell.pcm
        total = pcm.unit
        for a in atoms:
            if a.pcm.id != pcm.id:
                return f"address {addr} holds PCM {pcm.id}, demanded {a.pcm.id}"
            if not pcm.composable(total, a.demand):
                return f"demands on address {addr} are not composable"
            total = pcm.op_fn(total, a.demand)
        if not pcm_le(pcm, total, cell.value):
            return f"address {addr}: demand {show(total)} is not below stored {show(cell.value)}"
    return None


def sat_check(clauses: Sequence[Clause], heap: PMap) -> SatResult:
    reason = "no clauses"
    for c in clauses:
        why = check_clause(c, heap)
        if why is None:
            return SatResult(True, c)
        reason = why
    return SatResult(False, None, reason)


def _heap(h: Any) -> PMap:
    return h.heap if hasattr(h, "heap") and hasattr(h, "ctr") else h


def interp(p: SlProp, h: Any) -> bool:
    heap = _heap(h)
    try:
        clauses = normalize(p, heap)
    except FragmentError:
        if _has_wand(p):
            raise FragmentError("Wand requires enumeration mode (interp_naive with wand_heaps)")
        return interp_naive(p, heap)
    return sat_check(clauses, heap).ok


def explain(p: SlProp, h: Any) -> SatResult:
    heap = _heap(h)
    return sat_check(normalize(p, heap), heap)


def _has_wand(p: SlProp) -> bool:
    if isinstance(p, Wand):
        return True
    if isinstance(p, (Star, And, Or)):
        return _has_wand(p.left) or _has_wand(p.right)
    return False


def equiv_bounded(p: SlProp, q: SlProp, heaps: Iterable[Any]) -> bool:
    return all(interp(p, h) == interp(q, h) for h in heaps)


# ---------------------------------------------------------------------------
# Naive split-search oracle
# ---------------------------------------------------------------------------


def _cell_splits(cell: Any, grain: int) -> list:
    """All ways to share one cell between two heaps (``None`` = absent)."""
    out = [(None, cell), (cell, None)]
    splits = cell.pcm.splits_fn(cell.value, grain) if cell.pcm.splits_fn else [(cell.value, cell.pcm.unit)]
    for v0, v1 in splits:
        pair = (cell.with_value(v0), cell.with_value(v1))
        if pair not in out:
            out.append(pair)
    return out


def heap_splits(heap: PMap, grain: int = 2) -> Iterator[tuple]:
    addrs = sorted(heap.keys())
    options = [_cell_splits(heap[a], grain) for a in addrs]
    for choice in itertools.product(*options):
        h0 = {a: c0 for a, (c0, _) in zip(addrs, choice) if c0 is not None}
        h1 = {a: c1 for a, (_, c1) in zip(addrs, choice) if c1 is not None}
        yield pmap(h0), pmap(h1)


def interp_naive(p: SlProp, heap: Any, wand_heaps: Optional[Sequence[PMap]] = None,
                 grain: int = 2, root: Optional[PMap] = None) -> bool:
    heap = _heap(heap)
    root = heap if root is None else root

    def go(q: SlProp, h: PMap) -> bool:
        if isinstance(q, Emp):
            return True
        if isinstance(q, Pure):
            return q.holds()
        if isinstance(q, PtsTo):
            c = h.get(q.addr)
            if c is None or c.pcm.id != q.pcm.id:
                return False
            try:
                return pcm_le(c.pcm, q.demand, c.value)
            except PcmError:
                return False
        if isinstance(q, Star):
            return any(go(q.left, h0) and go(q.right, h1) for h0, h1 in heap_splits(h, grain))
        if isinstance(q, And):
            return go(q.left, h) and go(q.right, h)
        if isinstance(q, Or):
            return go(q.left, h) or go(q.right, h)
        if isinstance(q, Exists):
            return any(go(q.body(v), h) for v in _resolve(q.domain, root))
        if isinstance(q, Forall):
            return all(go(q.body(v), h) for v in _resolve(q.domain, root))
        if isinstance(q, Wand):
            if wand_heaps is None:
                raise FragmentError("Wand requires enumeration mode (pass wand_heaps)")
            from .memory import disjoint, join

            return all(go(q.right, join(h, ext)) for ext in wand_heaps
                       if disjoint(h, ext) and go(q.left, ext))
        raise TypeError(f"not an slprop: {q!r}")

    return go(p, heap)


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------


def pretty(p: SlProp, depth: int = 0) -> str:
    if isinstance(p, Emp):
        return "emp"
    if isinstance(p, Pure):
        if p.label:
            return f"pure({p.label})"
        if not callable(p.fact):
            return f"pure({bool(p.fact)})"
        return "pure(<fn>)"
    if isinstance(p, PtsTo):
        return f"{p.addr} |-> {show(p.demand)} @ {p.pcm.id}"
    if isinstance(p, Star):
        return f"{_paren(p.left, depth)} * {_paren(p.right, depth)}"
    if isinstance(p, Wand):
        return f"({pretty(p.left, depth)}) -* ({pretty(p.right, depth)})"
    if isinstance(p, And):
        return f"({pretty(p.left, depth)}) /\\ ({pretty(p.right, depth)})"
    if isinstance(p, Or):
        return f"({pretty(p.left, depth)}) \\/ ({pretty(p.right, depth)})"
    if isinstance(p, (Exists, Forall)):
        q = "exists" if isinstance(p, Exists) else "forall"
        dom = p.domain.label if hasattr(p.domain, "label") else "D"
        body = "..."
        if depth < 3:
            try:
                body = pretty(p.body(_Sym(p.label)), depth + 1)
            except Exception:
                pass
        return f"{q} {p.label} in {dom}. {body}"
    return repr(p)


def _paren(p: SlProp, depth: int) -> str:
    s = pretty(p, depth)
    return f"({s})" if isinstance(p, (Or, And, Wand, Exists, Forall)) else s


class _Sym:
    """Placeholder for a bound variable when printing a quantifier body."""

    def __init__(self, name: str) -> None:
        self.name = name

    def __repr__(self) -> str:
        return self.name
