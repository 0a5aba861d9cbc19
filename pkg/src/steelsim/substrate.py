"""Nondeterminism tape, preorder-checked state updates, and witnessed predicates.

Stability of a witnessed predicate is audited rather than proved: the
predicate must survive every transition in a small corpus made of the
transitions this run has already taken plus a handful of generated,
preorder-respecting ones (an allocation, an istore append, a counter bump,
and per-cell successor values supplied by each PCM).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional

from .algebra import frac_pcm
from .errors import CheckViolation, SteelsimError, TapeExhausted
from .memory import Cell, Mem, mem_evolves, mem_evolves_reason
from .values import Frac

AUDIT_WINDOW = 8


@dataclass(frozen=True)
class Tape:
    bits: tuple = ()
    cursor: int = 0
    seed: Optional[int] = None

    def bit(self, n: int) -> bool:
        if self.seed is not None:
            return random.Random(f"{self.seed}:{n}").random() < 0.5
        if n >= len(self.bits):
            raise TapeExhausted(f"tape exhausted at bit {n}")
        return bool(self.bits[n])

    def prefix(self) -> str:
        return "".join("1" if self.bit(i) else "0" for i in range(self.cursor))

    @classmethod
    def parse(cls, s: str) -> "Tape":
        if any(ch not in "01" for ch in s):
            raise ValueError(f"tape must be a bit string, got {s!r}")
        return cls(tuple(ch == "1" for ch in s))


@dataclass(frozen=True)
class WitnessRecord:
    id: int
    predicate: Callable[[Mem], bool]
    label: str = ""
    cert: int = 0  # number of audited transitions


@dataclass(frozen=True)
class RunState:
    mem: Mem = field(default_factory=Mem)
    tape: Tape = field(default_factory=Tape)
    witnesses: tuple = ()
    step_count: int = 0
    observed: tuple = ()


def sample(rs: RunState) -> tuple[bool, RunState]:
    b = rs.tape.bit(rs.tape.cursor)
    return b, replace(rs, tape=replace(rs.tape, cursor=rs.tape.cursor + 1))


def put_checked(rs: RunState, m1: Mem) -> RunState:
    why = mem_evolves_reason(rs.mem, m1)
    if why is not None:
        raise CheckViolation("preorder", why)
    if m1 is rs.mem:
        return rs
    observed = (rs.observed + ((rs.mem, m1),))[-AUDIT_WINDOW:]
    return replace(rs, mem=m1, observed=observed)


def generated_transitions(m: Mem) -> Iterator[Mem]:
    """Preorder-respecting successors of ``m`` used by the stability audit."""
    a = m.ctr
    yield replace(m, heap=m.heap.set(a, Cell("unit", frac_pcm(), Frac(()))), ctr=a + 1)
    yield replace(m, ctr=m.ctr + 1)
    from .slprop import EMP

    yield replace(m, istore=m.istore + (EMP,))
    for addr in sorted(m.heap.keys()):
        c = m.heap[addr]
        succ = c.pcm.successors_fn
        if succ is None:
            continue
        for v in succ(c.value):
            yield m.set_cell(addr, c.with_value(v))


def stability_audit(rs: RunState, q: Callable[[Mem], bool]) -> tuple[Optional[tuple], int]:
    """Return (counterexample transition or None, number of transitions checked)."""
    checked = 0
    sources = [rs.mem] + [m0 for m0, _ in rs.observed]
    pairs = list(rs.observed)
    for m in sources:
        pairs.extend((m, m1) for m1 in generated_transitions(m))
    for m0, m1 in pairs:
        if not mem_evolves(m0, m1):
            continue
        if q(m0):
            checked += 1
            if not q(m1):
                return (m0, m1), checked
    return None, checked


def witness(rs: RunState, q: Callable[[Mem], bool], label: str = "") -> tuple[WitnessRecord, RunState]:
    if not q(rs.mem):
        raise CheckViolation("witness", f"predicate {label or '?'} does not hold now")
    cex, checked = stability_audit(rs, q)
    if cex is not None:
        raise CheckViolation("stability-audit",
                             f"predicate {label or '?'} is not stable: fails after {cex[1]!r}")
    rec = WitnessRecord(len(rs.witnesses), q, label, checked)
    return rec, replace(rs, witnesses=rs.witnesses + (rec,))


def recall(rs: RunState, wid: int) -> RunState:
    if not 0 <= wid < len(rs.witnesses):
        raise SteelsimError(f"unknown witness id {wid}")
    rec = rs.witnesses[wid]
    if not rec.predicate(rs.mem):
        raise CheckViolation("stability-gap",
                             f"witnessed predicate {rec.label or wid} no longer holds; the audit missed a transition")
    return rs
