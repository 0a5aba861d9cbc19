"""Heaps of PCM-valued cells, memories, and the evolution preorder.

A heap is a persistent map (``pyrsistent.PMap``) from natural addresses to
:class:`Cell`, so branching explorations share structure.  Freed cells are
overwritten with their PCM unit rather than removed; this keeps ``h_evolves``
literally monotone while ``pts_to`` on a freed cell can no longer be satisfied
for any non-unit demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Optional

from pyrsistent import PMap, pmap

from .algebra import Pcm, evolves
from .errors import PcmError
from .values import show

Heap = PMap

EMPTY_HEAP: PMap = pmap()


@dataclass(frozen=True)
class Cell:
    type_tag: str
    pcm: Pcm
    value: Any
    erased: bool = False

    def __post_init__(self) -> None:
        _reject_slprops(self.value)
        self.pcm.check_domain(self.value)

    @property
    def pcm_id(self) -> str:
        return self.pcm.id

    def with_value(self, v: Any) -> "Cell":
        return replace(self, value=v)

    def same_kind(self, other: "Cell") -> bool:
        return (self.type_tag == other.type_tag and self.pcm_id == other.pcm_id
                and self.erased == other.erased)

    def __repr__(self) -> str:
        ghost = " ghost" if self.erased else ""
        return f"{self.type_tag}{ghost} {show(self.value)} @ {self.pcm_id}"


def _reject_slprops(v: Any, depth: int = 0) -> None:
    from .slprop import SlProp

    if isinstance(v, SlProp):
        raise TypeError("separation-logic assertions cannot be stored in the heap")
    if depth > 8:
        return
    if isinstance(v, (tuple, list, frozenset, set)):
        for x in v:
            _reject_slprops(x, depth + 1)
    elif hasattr(v, "__dataclass_fields__"):
        for name in v.__dataclass_fields__:
            _reject_slprops(getattr(v, name), depth + 1)


def heap_of(cells: Mapping[int, Cell] | Iterable[tuple]) -> PMap:
    return pmap(dict(cells))


def disjoint(h0: PMap, h1: PMap) -> bool:
    for a, c0 in h0.items():
        c1 = h1.get(a)
        if c1 is None:
            continue
        if not c0.same_kind(c1) or not c0.pcm.composable(c0.value, c1.value):
            return False
    return True


def join(h0: PMap, h1: PMap) -> PMap:
    if not disjoint(h0, h1):
        raise PcmError("join of heaps that are not disjoint")
    out = h0.evolver()
    for a, c1 in h1.items():
        c0 = h0.get(a)
        out[a] = c1 if c0 is None else c0.with_value(c0.pcm.op_fn(c0.value, c1.value))
    return out.persistent()


def h_evolves_reason(h0: PMap, h1: PMap) -> Optional[str]:
    """``None`` when ``h0`` evolves to ``h1``; otherwise a description of the first failure."""
    for a in sorted(h0.keys()):
        c0 = h0[a]
        c1 = h1.get(a)
        if c1 is None:
            return f"address {a} was dropped"
        if not c0.same_kind(c1):
            return f"address {a} changed kind: {c0!r} -> {c1!r}"
        if c0.value != c1.value and not evolves(c0.pcm, c0.value, c1.value):
            return f"address {a}: {show(c0.value)} -> {show(c1.value)} violates the preorder of {c0.pcm_id}"
    return None


def h_evolves(h0: PMap, h1: PMap) -> bool:
    return h_evolves_reason(h0, h1) is None


@dataclass(frozen=True)
class Mem:
    heap: PMap = field(default_factory=pmap)
    ctr: int = 0
    istore: tuple = ()

    def cell(self, a: int) -> Optional[Cell]:
        return self.heap.get(a)

    def set_cell(self, a: int, c: Cell) -> "Mem":
        return replace(self, heap=self.heap.set(a, c))

    def __repr__(self) -> str:
        return f"Mem(ctr={self.ctr}, istore={len(self.istore)}, heap={{{serialize_heap(self.heap)}}})"


def fresh_addr(m: Mem) -> tuple[int, Mem]:
    return m.ctr, replace(m, ctr=m.ctr + 1)


def i_evolves(i0: tuple, i1: tuple) -> bool:
    from .values import same

    return len(i0) <= len(i1) and all(same(a, b) for a, b in zip(i0, i1))


def mem_evolves_reason(m0: Mem, m1: Mem) -> Optional[str]:
    why = h_evolves_reason(m0.heap, m1.heap)
    if why is not None:
        return f"heap: {why}"
    if not i_evolves(m0.istore, m1.istore):
        return "istore: invariant store did not grow position-stably"
    if m0.ctr > m1.ctr:
        return f"ctr: decreased from {m0.ctr} to {m1.ctr}"
    return None


def mem_evolves(m0: Mem, m1: Mem) -> bool:
    return mem_evolves_reason(m0, m1) is None


def ctr_fresh(m: Mem) -> bool:
    """Every allocated address lies below the freshness counter."""
    return all(a < m.ctr for a in m.heap.keys())


def serialize_heap(h: PMap) -> str:
    return ", ".join(f"{a} |-> {h[a]!r}" for a in sorted(h.keys()))


def serialize_mem(m: Mem) -> str:
    from .slprop import pretty

    inv = "; ".join(pretty(p) for p in m.istore)
    return f"ctr={m.ctr} heap={{{serialize_heap(m.heap)}}} istore=[{inv}]"
