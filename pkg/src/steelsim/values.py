"""Heap payload values and structural fingerprints.

Cells hold ordinary immutable Python values (ints, bools, tuples, frozen
dataclasses).  A few wrappers carry PCM structure: :class:`Frac` for
fractional permissions, :class:`Hist` for preorder-respecting histories,
:class:`FracHist` for the fraction-times-history PCM behind monotonic
references, and :class:`Erased` for ghost values.
"""

from __future__ import annotations

import dataclasses
import types
from fractions import Fraction
from typing import Any

ONE = Fraction(1)
HALF = Fraction(1, 2)


def perm(x: Any) -> Fraction:
    """Coerce ``x`` to an exact permission; floats are rejected."""
    if isinstance(x, float):
        raise TypeError("permissions must be exact rationals, got a float")
    return Fraction(x)


@dataclasses.dataclass(frozen=True)
class Frac:
    """``Some(value, perm)`` in the fractional-permission PCM (unit is ``None``)."""

    value: Any
    perm: Fraction = ONE

    def __post_init__(self) -> None:
        p = perm(self.perm)
        if not 0 < p <= 1:
            raise ValueError(f"fractional permission out of (0, 1]: {p}")
        object.__setattr__(self, "perm", p)

    def __repr__(self) -> str:
        return f"Some({self.value!r}, {self.perm})"


@dataclasses.dataclass(frozen=True)
class Hist:
    """A finite history whose adjacent entries are related by ``order``.

    ``order`` is the id of the preorder; validity is established by
    :func:`steelsim.algebra.history`, which is the checked constructor.
    """

    entries: tuple = ()
    order: str = ""

    @property
    def last(self) -> Any:
        if not self.entries:
            raise ValueError("empty history has no last entry")
        return self.entries[-1]

    def is_prefix_of(self, other: "Hist") -> bool:
        n = len(self.entries)
        return n <= len(other.entries) and other.entries[:n] == self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __repr__(self) -> str:
        return f"Hist{list(self.entries)!r}"


@dataclasses.dataclass(frozen=True)
class FracHist:
    """Value of the fraction-times-history PCM.

    ``perm > 0`` is an owning share of the current history; ``perm == 0`` is
    a snapshot (knowledge that the history is at least ``hist``).
    """

    perm: Fraction
    hist: Hist

    def __post_init__(self) -> None:
        p = perm(self.perm)
        if not 0 <= p <= 1:
            raise ValueError(f"permission out of [0, 1]: {p}")
        object.__setattr__(self, "perm", p)

    def __repr__(self) -> str:
        return f"FH({self.perm}, {self.hist!r})"


@dataclasses.dataclass(frozen=True)
class Erased:
    """A ghost value: usable in specifications, never in concrete control flow."""

    value: Any

    def __repr__(self) -> str:
        return f"erased({self.value!r})"


def reveal(v: Any) -> Any:
    return v.value if isinstance(v, Erased) else v


def show(v: Any) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return repr(v)


# ---------------------------------------------------------------------------
# Structural fingerprints
# ---------------------------------------------------------------------------

_ATOMS = (type(None), bool, int, str, bytes, Fraction, float, complex)


def fingerprint(obj: Any) -> Any:
    """A hashable structural key for ``obj``.

    Closures are keyed by their code object plus the fingerprints of their
    captured cells and defaults, so two continuations built by the same
    builder from equal arguments get equal keys.  Objects of unknown shape
    fall back to identity, which can only make keys *more* distinct.
    """
    return _fp(obj, {}, set())


def _fp(obj: Any, memo: dict, active: set) -> Any:
    if isinstance(obj, _ATOMS):
        return (type(obj).__name__, obj)
    key = id(obj)
    if key in memo:
        return memo[key]
    if key in active:
        return ("cycle", type(obj).__qualname__, getattr(obj, "__qualname__", ""))
    active.add(key)
    try:
        out = _fp_compound(obj, memo, active)
    finally:
        active.discard(key)
    memo[key] = out
    return out


def _fp_compound(obj: Any, memo: dict, active: set) -> Any:
    if isinstance(obj, (tuple, list)):
        return (type(obj).__name__,) + tuple(_fp(x, memo, active) for x in obj)
    if isinstance(obj, (frozenset, set)):
        return ("set", frozenset(_fp(x, memo, active) for x in obj))
    if isinstance(obj, types.FunctionType):
        code = obj.__code__
        cells = tuple(_fp(c.cell_contents, memo, active) if _cell_filled(c) else ("empty",)
                      for c in (obj.__closure__ or ()))
        defaults = _fp(obj.__defaults__ or (), memo, active)
        return ("fn", code.co_filename, code.co_firstlineno, code.co_qualname
                if hasattr(code, "co_qualname") else code.co_name, cells, defaults)
    if isinstance(obj, types.BuiltinFunctionType):
        return ("builtin", obj.__qualname__)
    if isinstance(obj, types.MethodType):
        return ("method", _fp(obj.__func__, memo, active), _fp(obj.__self__, memo, active))
    custom = getattr(type(obj), "__fingerprint__", None)
    if custom is not None:
        return (type(obj).__qualname__, _fp(custom(obj), memo, active))
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return (type(obj).__qualname__,) + tuple(
            _fp(getattr(obj, f.name), memo, active)
            for f in dataclasses.fields(obj) if f.compare)
    if hasattr(obj, "items") and callable(obj.items):
        items = [(_fp(k, memo, active), _fp(v, memo, active)) for k, v in obj.items()]
        return ("map", tuple(sorted(items, key=repr)))
    return ("obj", type(obj).__qualname__, id(obj))


def _cell_filled(cell: Any) -> bool:
    try:
        cell.cell_contents
    except ValueError:
        return False
    return True


def same(a: Any, b: Any) -> bool:
    """Structural equality that sees through closures (used for protocols and slprops)."""
    if a is b:
        return True
    return fingerprint(a) == fingerprint(b)
