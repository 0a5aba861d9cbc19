"""Indexed action trees.

Each node exposes its pre-footprint ``pre`` and post-footprint ``post``
(a function from the result value to an slprop).  Footprints are derived
structurally exactly as the constructors' indices prescribe: ``Par`` stars
its branches, ``Frame`` stars its frame, ``Ret`` starts from ``post(value)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from ..slprop import EMP, SlProp, Star


def emp_post(_x: Any) -> SlProp:
    return EMP


@dataclass(frozen=True)
class ParPost:
    left: Callable[[Any], SlProp]
    right: Callable[[Any], SlProp]

    def __call__(self, xy: Any) -> SlProp:
        x, y = xy
        return Star(self.left(x), self.right(y))


@dataclass(frozen=True)
class FramePost:
    inner: Callable[[Any], SlProp]
    frame: SlProp

    def __call__(self, x: Any) -> SlProp:
        return Star(self.inner(x), self.frame)


@dataclass(frozen=True)
class ConstPost:
    prop: SlProp

    def __call__(self, _x: Any) -> SlProp:
        return self.prop


class CTree:
    __slots__ = ()
    pre: SlProp
    post: Callable[[Any], SlProp]


@dataclass(frozen=True, eq=False)
class Ret(CTree):
    value: Any
    post: Callable[[Any], SlProp] = emp_post

    @property
    def pre(self) -> SlProp:
        return self.post(self.value)


@dataclass(frozen=True, eq=False)
class Act(CTree):
    action: Any

    @property
    def pre(self) -> SlProp:
        return self.action.pre

    @property
    def post(self) -> Callable[[Any], SlProp]:
        return self.action.post


@dataclass(frozen=True, eq=False)
class Bind(CTree):
    head: CTree
    cont: Callable[[Any], CTree]
    post: Callable[[Any], SlProp] = emp_post

    @property
    def pre(self) -> SlProp:
        return self.head.pre


@dataclass(frozen=True, eq=False)
class Par(CTree):
    left: CTree
    right: CTree

    @property
    def pre(self) -> SlProp:
        return Star(self.left.pre, self.right.pre)

    @property
    def post(self) -> ParPost:
        return ParPost(self.left.post, self.right.post)


@dataclass(frozen=True, eq=False)
class Frame(CTree):
    inner: CTree
    frame: SlProp

    @property
    def pre(self) -> SlProp:
        return Star(self.inner.pre, self.frame)

    @property
    def post(self) -> FramePost:
        return FramePost(self.inner.post, self.frame)


@dataclass(frozen=True, eq=False)
class Sub(CTree):
    inner: CTree
    pre: SlProp
    post: Callable[[Any], SlProp]


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def ret(value: Any = (), post: Callable[[Any], SlProp] = emp_post) -> Ret:
    return Ret(value, post)


def act(action: Any) -> Act:
    return Act(action)


def bind(head: CTree, cont: Callable[[Any], CTree], post: Callable[[Any], SlProp] = emp_post) -> Bind:
    return Bind(head, cont, post)


def seq(*trees: CTree, post: Callable[[Any], SlProp] = emp_post) -> CTree:
    """Run ``trees`` in order and return the last result."""
    if not trees:
        return Ret((), post)
    if len(trees) == 1:
        return trees[0]
    head, rest = trees[0], trees[1:]
    return Bind(head, _SeqCont(rest, post), post)


@dataclass(frozen=True)
class _SeqCont:
    rest: tuple
    post: Callable[[Any], SlProp]

    def __call__(self, _x: Any) -> CTree:
        return seq(*self.rest, post=self.post)


def par(left: CTree, right: CTree) -> Par:
    return Par(left, right)


def frame(inner: CTree, f: SlProp) -> Frame:
    return Frame(inner, f)


def sub(inner: CTree, pre: SlProp, post: Callable[[Any], SlProp]) -> Sub:
    return Sub(inner, pre, post)


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


def measure(t: CTree) -> int:
    """Number of non-``Ret`` nodes reachable without applying continuations."""
    if isinstance(t, Ret):
        return 0
    if isinstance(t, Act):
        return 1
    if isinstance(t, Bind):
        return 1 + measure(t.head)
    if isinstance(t, Par):
        return 1 + measure(t.left) + measure(t.right)
    if isinstance(t, (Frame, Sub)):
        return 1 + measure(t.inner)
    raise TypeError(f"not a tree: {t!r}")


def describe(t: CTree, depth: int = 0) -> str:
    if depth > 6:
        return "..."
    if isinstance(t, Ret):
        return f"Ret({t.value!r})"
    if isinstance(t, Act):
        return f"Act({t.action.name})"
    if isinstance(t, Bind):
        return f"Bind({describe(t.head, depth + 1)}, <k>)"
    if isinstance(t, Par):
        return f"Par({describe(t.left, depth + 1)}, {describe(t.right, depth + 1)})"
    if isinstance(t, Frame):
        return f"Frame({describe(t.inner, depth + 1)})"
    if isinstance(t, Sub):
        return f"Sub({describe(t.inner, depth + 1)})"
    return repr(t)
