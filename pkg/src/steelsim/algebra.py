"""Partial commutative monoids, preorders, and the translations between them.

Every PCM ships a fast decision procedure for ``le``, frame preservation and
its induced evolution preorder; when a finite ``carrier_hint`` is present the
brute-force routines here serve as the ground-truth oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Iterable, Iterator, Optional, Sequence

from .errors import DomainError, HistoryError, PcmError, ResourceCapError, UndecidableError
from .values import ONE, Frac, FracHist, Hist

DEFAULT_CARRIER_CAP = 64


@dataclass(frozen=True, eq=False)
class Pcm:
    """A PCM descriptor.  Identity is by ``id``."""

    id: str
    unit: Any
    composable: Callable[[Any, Any], bool]
    op_fn: Callable[[Any, Any], Any]
    in_domain: Callable[[Any], bool] = lambda v: True
    le_fn: Optional[Callable[[Any, Any], bool]] = None
    fp_fn: Optional[Callable[[Any, Any], bool]] = None
    exclusive_fn: Optional[Callable[[Any], bool]] = None
    evolves_fn: Optional[Callable[[Any, Any], bool]] = None
    splits_fn: Optional[Callable[[Any, int], Iterable[tuple]]] = None
    residual_fn: Optional[Callable[[Any, Any], Any]] = None
    successors_fn: Optional[Callable[[Any], Iterable[Any]]] = None
    carrier_hint: Optional[tuple] = None

    def op(self, x: Any, y: Any) -> Any:
        if not self.composable(x, y):
            raise PcmError(f"{self.id}: {x!r} and {y!r} are not composable")
        return self.op_fn(x, y)

    def check_domain(self, *vs: Any) -> None:
        for v in vs:
            if not self.in_domain(v):
                raise DomainError(f"{v!r} is not in the domain of PCM {self.id}")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Pcm) and other.id == self.id

    def __hash__(self) -> int:
        return hash(("pcm", self.id))

    def __fingerprint__(self) -> str:
        return self.id

    def __repr__(self) -> str:
        return f"Pcm({self.id})"


@dataclass(frozen=True, eq=False)
class Preorder:
    id: str
    rel: Callable[[Any, Any], bool]
    carrier_hint: Optional[tuple] = None

    def __call__(self, x: Any, y: Any) -> bool:
        return self.rel(x, y)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Preorder) and other.id == self.id

    def __hash__(self) -> int:
        return hash(("preorder", self.id))

    def __fingerprint__(self) -> str:
        return self.id

    def __repr__(self) -> str:
        return f"Preorder({self.id})"


# ---------------------------------------------------------------------------
# Law checking and brute-force oracles
# ---------------------------------------------------------------------------


@dataclass
class LawReport:
    results: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(ok for ok, _ in self.results.values())

    def failures(self) -> dict:
        return {law: cex for law, (ok, cex) in self.results.items() if not ok}


def pcm_check_laws(p: Pcm, carrier: Sequence[Any]) -> LawReport:
    """Exhaustively check the PCM laws on ``carrier``; report a witness per failed law."""
    carrier = list(carrier)
    report = LawReport()

    def first(pred: Callable[..., bool], arity: int) -> Optional[tuple]:
        for args in itertools.product(carrier, repeat=arity):
            if not pred(*args):
                return args
        return None

    def sym(x, y):
        return p.composable(x, y) == p.composable(y, x)

    def comm(x, y):
        return not p.composable(x, y) or p.op_fn(x, y) == p.op_fn(y, x)

    def assoc(x, y, z):
        left = p.composable(y, z) and p.composable(x, p.op_fn(y, z))
        right = p.composable(x, y) and p.composable(p.op_fn(x, y), z)
        if left != right:
            return False
        return not left or p.op_fn(x, p.op_fn(y, z)) == p.op_fn(p.op_fn(x, y), z)

    def unit(x):
        return (p.composable(p.unit, x) and p.composable(x, p.unit)
                and p.op_fn(p.unit, x) == x and p.op_fn(x, p.unit) == x)

    for law, pred, arity in (("symmetry", sym, 2), ("commutativity", comm, 2),
                             ("associativity", assoc, 3), ("unit", unit, 1)):
        cex = first(pred, arity)
        report.results[law] = (cex is None, cex)
    return report


def le_bruteforce(p: Pcm, x: Any, y: Any, carrier: Iterable[Any]) -> bool:
    return any(p.composable(x, f) and p.op_fn(x, f) == y for f in carrier)


def frame_preserving_bruteforce(p: Pcm, x: Any, y: Any, carrier: Iterable[Any]) -> bool:
    return all(p.composable(f, y) and p.op_fn(f, y) == y
               for f in carrier if p.composable(f, x))


def exclusive_bruteforce(p: Pcm, v: Any, carrier: Iterable[Any]) -> bool:
    return all(f == p.unit for f in carrier if p.composable(f, v))


def _carrier_or_fail(p: Pcm, what: str) -> tuple:
    if p.carrier_hint is None:
        raise UndecidableError(f"{what} for PCM {p.id}: no decision procedure and no carrier hint")
    return p.carrier_hint


def pcm_le(p: Pcm, x: Any, y: Any) -> bool:
    """``x`` is below ``y``: some composable frame completes ``x`` to ``y``."""
    p.check_domain(x, y)
    if p.le_fn is not None:
        return p.le_fn(x, y)
    return le_bruteforce(p, x, y, _carrier_or_fail(p, "le"))


def frame_preserving(p: Pcm, x: Any, y: Any) -> bool:
    """Every frame composable with ``x`` stays composable with, and is absorbed by, ``y``."""
    p.check_domain(x, y)
    if p.fp_fn is not None:
        return p.fp_fn(x, y)
    return frame_preserving_bruteforce(p, x, y, _carrier_or_fail(p, "frame_preserving"))


def exclusive(p: Pcm, v: Any) -> bool:
    p.check_domain(v)
    if p.exclusive_fn is not None:
        return p.exclusive_fn(v)
    return exclusive_bruteforce(p, v, _carrier_or_fail(p, "exclusive"))


def evolves(p: Pcm, x: Any, y: Any) -> bool:
    """The PCM's induced preorder, via its specific procedure or the carrier fixpoint."""
    if p.evolves_fn is not None:
        return p.evolves_fn(x, y)
    return preorder_of_pcm(p, _carrier_or_fail(p, "evolves"))(x, y)


def fold_op(p: Pcm, values: Iterable[Any]) -> Any:
    """Compose ``values``; raises :class:`PcmError` when they are not composable."""
    acc = p.unit
    for v in values:
        acc = p.op(acc, v)
    return acc


# ---------------------------------------------------------------------------
# Preorders
# ---------------------------------------------------------------------------


def check_preorder(q: Preorder, carrier: Sequence[Any]) -> Optional[tuple]:
    """Return a counterexample to reflexivity or transitivity, or ``None``."""
    for x in carrier:
        if not q(x, x):
            return ("reflexivity", x)
    for x, y, z in itertools.product(carrier, repeat=3):
        if q(x, y) and q(y, z) and not q(x, z):
            return ("transitivity", x, y, z)
    return None


def _rt_closure(carrier: list, pairs: set) -> set:
    idx = {i: c for i, c in enumerate(carrier)}
    n = len(carrier)
    reach = [[i == j or (idx[i], idx[j]) in pairs for j in range(n)] for i in range(n)]
    for k in range(n):
        rk = reach[k]
        for i in range(n):
            if reach[i][k]:
                ri = reach[i]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True
    return {(idx[i], idx[j]) for i in range(n) for j in range(n) if reach[i][j]}


def _compatible(p: Pcm, x: Any, z: Any, carrier: Sequence[Any]) -> bool:
    return x == z or le_bruteforce(p, x, z, carrier)


def preorder_of_pcm(p: Pcm, carrier: Sequence[Any], cap: int = DEFAULT_CARRIER_CAP) -> Preorder:
    """Strongest preorder relating every ``z`` above ``x`` to ``y`` whenever ``x -> y``
    is frame preserving, computed as a reflexive-transitive fixpoint on ``carrier``.
    """
    carrier = list(dict.fromkeys(carrier))
    if len(carrier) > cap:
        raise ResourceCapError(f"carrier of {len(carrier)} elements exceeds cap {cap}")
    pairs = set()
    for x, y in itertools.product(carrier, repeat=2):
        if frame_preserving_bruteforce(p, x, y, carrier):
            for z in carrier:
                if _compatible(p, x, z, carrier):
                    pairs.add((z, y))
    closure = frozenset(_rt_closure(carrier, pairs))
    return Preorder(f"po[{p.id}]", lambda a, b: (a, b) in closure, tuple(carrier))


def induces(p: Pcm, q: Preorder, carrier: Sequence[Any], cap: int = DEFAULT_CARRIER_CAP) -> bool:
    carrier = list(carrier)
    if len(carrier) > cap:
        raise ResourceCapError(f"carrier of {len(carrier)} elements exceeds cap {cap}")
    for x, y in itertools.product(carrier, repeat=2):
        if frame_preserving_bruteforce(p, x, y, carrier):
            for z in carrier:
                if _compatible(p, x, z, carrier) and not q(z, y):
                    return False
    return True


def equality_preorder() -> Preorder:
    return Preorder("eq", lambda a, b: a == b)


def total_preorder() -> Preorder:
    return Preorder("total", lambda a, b: True)


def int_le(carrier: Optional[tuple] = None) -> Preorder:
    return Preorder("int<=", lambda a, b: a <= b, carrier)


# ---------------------------------------------------------------------------
# Fractional permissions
# ---------------------------------------------------------------------------


def _frac_domain(v: Any) -> bool:
    return v is None or isinstance(v, Frac)


def _frac_composable(a: Any, b: Any) -> bool:
    if a is None or b is None:
        return True
    return a.value == b.value and a.perm + b.perm <= 1


def _frac_op(a: Any, b: Any) -> Any:
    if a is None:
        return b
    if b is None:
        return a
    return Frac(a.value, a.perm + b.perm)


def _frac_le(x: Any, y: Any) -> bool:
    if x is None:
        return True
    if y is None:
        return False
    return x.value == y.value and x.perm <= y.perm


def _full(v: Any) -> bool:
    return v is not None and v.perm == ONE


def _frac_evolves(x: Any, y: Any) -> bool:
    return x == y or _full(x)


def _perm_grid(total: Fraction, grain: int) -> Iterator[Fraction]:
    k = 1
    while Fraction(k, grain) < total:
        yield Fraction(k, grain)
        k += 1


def _frac_splits(v: Any, grain: int = 4) -> Iterator[tuple]:
    yield (None, v)
    if v is None:
        return
    yield (v, None)
    for r in _perm_grid(v.perm, grain):
        yield (Frac(v.value, r), Frac(v.value, v.perm - r))


def _frac_residual(v: Any, d: Any) -> Any:
    if d is None:
        return v
    if v is None or not _frac_le(d, v):
        raise PcmError(f"{d!r} is not below {v!r}")
    if d.perm == v.perm:
        return None
    return Frac(v.value, v.perm - d.perm)


def _frac_successors(v: Any) -> Iterator[Any]:
    if not _full(v):
        return
    x = v.value
    if isinstance(x, bool):
        yield Frac(not x)
    elif isinstance(x, int):
        yield Frac(x + 1)
        yield Frac(x - 1)
    yield None


@lru_cache(maxsize=None)
def frac_pcm() -> Pcm:
    return Pcm(
        id="frac",
        unit=None,
        composable=_frac_composable,
        op_fn=_frac_op,
        in_domain=_frac_domain,
        le_fn=_frac_le,
        fp_fn=lambda x, y: _full(x),
        exclusive_fn=_full,
        evolves_fn=_frac_evolves,
        splits_fn=_frac_splits,
        residual_fn=_frac_residual,
        successors_fn=_frac_successors,
    )


def frac_carrier(payloads: Iterable[Any], perms: Iterable[Any]) -> tuple:
    """``None`` plus every ``Some(v, r)`` for the given payloads and permissions."""
    return (None,) + tuple(Frac(v, Fraction(r)) for v in payloads for r in perms)


def frac_with_carrier(carrier: tuple) -> Pcm:
    """The frac PCM with a carrier hint and no fast procedures (oracle-only variant)."""
    return Pcm(id="frac", unit=None, composable=_frac_composable, op_fn=_frac_op,
               in_domain=_frac_domain, carrier_hint=carrier)


# ---------------------------------------------------------------------------
# Histories
# ---------------------------------------------------------------------------


def history(q: Preorder, entries: Iterable[Any]) -> Hist:
    """Checked history constructor: adjacent entries must be related by ``q``."""
    entries = tuple(entries)
    for a, b in zip(entries, entries[1:]):
        if not q(a, b):
            raise HistoryError(f"history step {a!r} -> {b!r} violates preorder {q.id}")
    return Hist(entries, q.id)


def histories(q: Preorder, values: Sequence[Any], max_len: int) -> tuple:
    """Every ``q``-respecting history over ``values`` of length at most ``max_len``."""
    out = [Hist((), q.id)]
    frontier = [()]
    for _ in range(max_len):
        nxt = []
        for h in frontier:
            for v in values:
                if not h or q(h[-1], v):
                    nxt.append(h + (v,))
        out.extend(Hist(h, q.id) for h in nxt)
        frontier = nxt
    return tuple(out)


def history_extension(q: Preorder) -> Preorder:
    return Preorder(f"ext[{q.id}]", lambda a, b: a.is_prefix_of(b))


def _comparable(a: Hist, b: Hist) -> bool:
    return a.is_prefix_of(b) or b.is_prefix_of(a)


def pcm_of_preorder(q: Preorder, max_len: int = 2) -> Pcm:
    """PCM over ``q``-histories: composable when one extends the other; op keeps the longer."""

    def in_domain(v: Any) -> bool:
        if not isinstance(v, Hist) or v.order != q.id:
            return False
        return all(q(a, b) for a, b in zip(v.entries, v.entries[1:]))

    def op(a: Hist, b: Hist) -> Hist:
        return b if a.is_prefix_of(b) else a

    carrier = histories(q, q.carrier_hint, max_len) if q.carrier_hint is not None else None
    return Pcm(
        id=f"hist[{q.id}]",
        unit=Hist((), q.id),
        composable=_comparable,
        op_fn=op,
        in_domain=in_domain,
        le_fn=lambda x, y: x.is_prefix_of(y),
        # every non-empty history has unboundedly many extensions (q is reflexive),
        # so no update can absorb all of them
        fp_fn=lambda x, y: False,
        evolves_fn=lambda x, y: x == y,
        splits_fn=lambda v, grain=4: [(Hist(v.entries[:k], v.order), v)
                                      for k in range(len(v) + 1)]
        + [(v, Hist(v.entries[:k], v.order)) for k in range(len(v))],
        residual_fn=lambda v, d: v,
        carrier_hint=carrier,
    )


# ---------------------------------------------------------------------------
# Fraction x history (monotonic references)
# ---------------------------------------------------------------------------


def _fh_composable(a: Any, b: Any) -> bool:
    if a is None or b is None:
        return True
    if a.perm + b.perm > 1:
        return False
    if a.perm > 0 and b.perm > 0:
        return a.hist == b.hist
    if a.perm > 0:
        return b.hist.is_prefix_of(a.hist)
    if b.perm > 0:
        return a.hist.is_prefix_of(b.hist)
    return _comparable(a.hist, b.hist)


def _fh_op(a: Any, b: Any) -> Any:
    if a is None:
        return b
    if b is None:
        return a
    if a.perm > 0:
        h = a.hist
    elif b.perm > 0:
        h = b.hist
    else:
        h = b.hist if a.hist.is_prefix_of(b.hist) else a.hist
    return FracHist(a.perm + b.perm, h)


def _fh_le(x: Any, y: Any) -> bool:
    if x is None:
        return True
    if y is None:
        return False
    if x.perm > 0:
        return x.hist == y.hist and x.perm <= y.perm
    return x.hist.is_prefix_of(y.hist)


def _fh_fp(x: Any, y: Any) -> bool:
    return (x is not None and x.perm == ONE and y is not None
            and x.hist.is_prefix_of(y.hist))


def _fh_evolves(x: Any, y: Any) -> bool:
    return x == y or _fh_fp(x, y)


def _fh_residual(v: Any, d: Any) -> Any:
    if d is None:
        return v
    if not _fh_le(d, v):
        raise PcmError(f"{d!r} is not below {v!r}")
    if d.perm == 0:
        return v
    return FracHist(v.perm - d.perm, v.hist)


def _fh_splits(v: Any, grain: int = 4) -> Iterator[tuple]:
    yield (None, v)
    if v is None:
        return
    yield (v, None)
    for k in range(len(v.hist) + 1):
        snap = FracHist(0, Hist(v.hist.entries[:k], v.hist.order))
        yield (snap, v)
        yield (v, snap)
    for r in _perm_grid(v.perm, grain):
        yield (FracHist(r, v.hist), FracHist(v.perm - r, v.hist))


def frac_hist(q: Preorder, extend_candidates: Optional[Callable[[Any], Iterable[Any]]] = None) -> Pcm:
    """Fractional ownership of a ``q``-history, plus zero-permission snapshots."""

    def in_domain(v: Any) -> bool:
        return v is None or (isinstance(v, FracHist) and v.hist.order == q.id)

    def successors(v: Any) -> Iterator[Any]:
        if not isinstance(v, FracHist) or v.perm != ONE:
            return
        h = v.hist
        if not h.entries:
            return
        last = h.last
        cands = list(extend_candidates(last)) if extend_candidates else []
        if q.carrier_hint:
            cands.extend(q.carrier_hint)
        if isinstance(last, int) and not isinstance(last, bool):
            cands.extend([last, last + 1, last + 5])
        for c in dict.fromkeys(cands):
            if q(last, c):
                yield FracHist(ONE, Hist(h.entries + (c,), h.order))

    return Pcm(
        id=f"frac_hist[{q.id}]",
        unit=None,
        composable=_fh_composable,
        op_fn=_fh_op,
        in_domain=in_domain,
        le_fn=_fh_le,
        fp_fn=_fh_fp,
        exclusive_fn=lambda v: False,
        evolves_fn=_fh_evolves,
        splits_fn=_fh_splits,
        residual_fn=_fh_residual,
        successors_fn=successors,
    )
