"""Single-step and multi-step interpretation with runtime checking.

After every step the checker establishes, on the new memory:

* the invariant store and the reduct's pre-footprint hold together, and all
  addresses lie below the freshness counter;
* frames are preserved: the residual ownership left over at every address
  (stored value minus everything the program and invariants claim) is still
  separable from the reduct's footprint;
* the memory evolved according to the preorder.

``Par`` consumes a tape bit only when both branches are about to execute an
action (or make a choice of their own); structural rewrites such as unwrapping
``Sub`` or feeding a ``Ret`` to a continuation are performed leftmost-first
without sampling.  Interleavings therefore differ exactly in the order of
actions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Any, Callable, Optional

from ..errors import (
    CheckViolation,
    CompositionError,
    ConstructionError,
    DoubleOpenError,
    HistoryError,
    PcmError,
    SteelsimError,
    TapeExhausted,
)
from ..memory import Mem, ctr_fresh, mem_evolves_reason, serialize_mem
from ..slprop import EMP, PtsTo, SlProp, Star, explain, interp, pretty, star
from ..substrate import RunState, Tape, sample
from .actions import execute, istore_inv
from .ctree import Act, Bind, CTree, Frame, Par, Ret, Sub, describe

DEFAULT_STEP_BOUND = 2000


@dataclass(frozen=True)
class ViolationReport:
    program: str
    strategy: str
    tape: str
    step_index: int
    node_path: str
    kind: str
    mem_snapshot: str
    message: str

    def to_dict(self) -> dict:
        return {
            "program": self.program,
            "strategy": self.strategy,
            "tape": self.tape,
            "step_index": self.step_index,
            "node_path": self.node_path,
            "kind": self.kind,
            "mem_snapshot": self.mem_snapshot,
            "message": self.message,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class Completed:
    value: Any
    mem: Mem
    steps: int
    tape: str
    trail: tuple = ()


@dataclass(frozen=True)
class BoundExceeded:
    mem: Mem
    steps: int
    tape: str
    reason: str = "steps"
    trail: tuple = ()


@dataclass(frozen=True)
class Violation:
    report: ViolationReport
    trail: tuple = ()

    @property
    def kind(self) -> str:
        return self.report.kind


@dataclass(frozen=True)
class Pruned:
    tape: str


@dataclass(frozen=True)
class Incomplete:
    """A finite tape ran out before the run finished."""

    mem: Mem
    steps: int
    tape: str


# ---------------------------------------------------------------------------
# Single step
# ---------------------------------------------------------------------------


def _redex_kind(t: CTree) -> str:
    """``"done"``, ``"act"`` (next step runs an action or samples), or ``"struct"``."""
    if isinstance(t, Ret):
        return "done"
    if isinstance(t, Act):
        return "act"
    if isinstance(t, Bind):
        return "struct" if isinstance(t.head, Ret) else _redex_kind(t.head)
    if isinstance(t, Frame):
        return "struct" if isinstance(t.inner, Ret) else _redex_kind(t.inner)
    if isinstance(t, Sub):
        return "struct"
    if isinstance(t, Par):
        kl, kr = _redex_kind(t.left), _redex_kind(t.right)
        if kl == "done" and kr == "done":
            return "struct"
        if kl == "done":
            return kr
        if kr == "done":
            return kl
        return "struct" if "struct" in (kl, kr) else "act"
    raise TypeError(f"not a tree: {t!r}")


def step(rs: RunState, t: CTree, path: str = "") -> tuple:
    """Reduce ``t`` once.  Returns ``(rs, reduct, node_path)``.

    Raises :class:`CheckViolation` (with a ``path`` attribute) for failed
    action contracts and :class:`TapeExhausted` at an unresolvable choice.
    """
    if isinstance(t, Ret):
        return rs, t, path or "Ret"
    if isinstance(t, Act):
        here = f"{path}/Act({t.action.name})" if path else f"Act({t.action.name})"
        try:
            x, rs = execute(t.action, rs, frozenset())
        except CheckViolation as e:
            e.path = getattr(e, "path", None) or here
            raise
        return rs, Ret(x, t.action.post), here
    if isinstance(t, Bind):
        if isinstance(t.head, Ret):
            return rs, t.cont(t.head.value), f"{path}/Bind.ret" if path else "Bind.ret"
        rs, h2, p = step(rs, t.head, f"{path}/Bind.head" if path else "Bind.head")
        cont = t.cont
        if h2.post != t.head.post:
            cont = _SubCont(t.cont, h2.post, t.post)
        return rs, Bind(h2, cont, t.post), p
    if isinstance(t, Frame):
        if isinstance(t.inner, Ret):
            return rs, Ret(t.inner.value, t.post), f"{path}/Frame.ret" if path else "Frame.ret"
        rs, c2, p = step(rs, t.inner, f"{path}/Frame" if path else "Frame")
        return rs, Frame(c2, t.frame), p
    if isinstance(t, Sub):
        return rs, t.inner, f"{path}/Sub" if path else "Sub"
    if isinstance(t, Par):
        here = path or ""
        l, r = t.left, t.right
        if isinstance(l, Ret) and isinstance(r, Ret):
            return rs, Ret((l.value, r.value), t.post), f"{here}/Par.join" if here else "Par.join"
        kl, kr = _redex_kind(l), _redex_kind(r)
        if kl == "done":
            go_left = False
        elif kr == "done":
            go_left = True
        elif kl == "struct":
            go_left = True
        elif kr == "struct":
            go_left = False
        else:
            go_left, rs = sample(rs)
        try:
            if go_left:
                rs, l2, p = step(rs, l, f"{here}/Par.L" if here else "Par.L")
                return rs, Par(l2, r), p
            rs, r2, p = step(rs, r, f"{here}/Par.R" if here else "Par.R")
            return rs, Par(l, r2), p
        except CheckViolation as e:
            # keep the bits sampled on the way down so the report's tape replays
            if getattr(e, "rs", None) is None:
                e.rs = rs
            raise
    raise TypeError(f"not a tree: {t!r}")


@dataclass(frozen=True)
class _SubCont:
    """Continuation re-indexed after its head stepped to a new post-footprint."""

    cont: Callable[[Any], CTree]
    pre_fn: Callable[[Any], SlProp]
    post: Callable[[Any], SlProp]

    def __call__(self, x: Any) -> CTree:
        return Sub(self.cont(x), self.pre_fn(x), self.post)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


def footprint_ok(m: Mem, pre: SlProp) -> bool:
    return ctr_fresh(m) and interp(Star(istore_inv(m.istore), pre), m)


def residual_frame(m: Mem, pre: SlProp) -> SlProp:
    """Star of the unclaimed remainder at each address, given that ``inv * pre`` holds."""
    whole = Star(istore_inv(m.istore), pre)
    res = explain(whole, m)
    if not res.ok:
        return EMP
    claimed: dict = {}
    for a in res.clause.atoms:
        claimed.setdefault(a.addr, []).append(a.demand)
    atoms = []
    for addr in sorted(m.heap.keys()):
        c = m.heap[addr]
        if c.pcm.residual_fn is None:
            continue
        total = c.pcm.unit
        for d in claimed.get(addr, ()):
            total = c.pcm.op_fn(total, d)
        try:
            rest = c.pcm.residual_fn(c.value, total)
        except SteelsimError:
            continue
        if rest != c.pcm.unit:
            atoms.append(PtsTo(addr, c.pcm, rest))
    return star(*atoms)


def post_step_check(m0: Mem, m1: Mem, pre0: SlProp, pre1: SlProp, check_frames: bool = True) -> None:
    why = mem_evolves_reason(m0, m1)
    if why is not None:
        raise CheckViolation("preorder", why)
    if not ctr_fresh(m1):
        raise CheckViolation("footprint", "an allocated address is not below ctr")
    whole = Star(istore_inv(m1.istore), pre1)
    if not interp(whole, m1):
        reason = ""
        try:
            reason = explain(whole, m1).reason
        except SteelsimError:
            pass
        raise CheckViolation("footprint", f"inv * pre does not hold after step: {reason}")
    if check_frames and m0 is not m1:
        f = residual_frame(m0, pre0)
        if f is not EMP and not interp(Star(whole, f), m1):
            raise CheckViolation("frame", f"step did not preserve frame {pretty(f)}")


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    program: str = ""
    strategy: str = ""
    bound: int = DEFAULT_STEP_BOUND
    post: Optional[Callable[[Any], SlProp]] = None
    check: Optional[Callable[[Any, Mem], Optional[str]]] = None
    check_frames: bool = True
    record: bool = False


@dataclass(frozen=True)
class Branch:
    rs: RunState
    tree: CTree
    steps: int
    trail: tuple
    final_post: Any = None


def construction_kind(e: Exception) -> str:
    """Violation kind for a program fragment that was rejected while being built."""
    if isinstance(e, DoubleOpenError):
        return "double-open"
    if isinstance(e, CompositionError):
        return "composition"
    return "construction"


def _violation(cfg: RunConfig, rs: RunState, steps: int, path: str, kind: str, msg: str,
               trail: tuple) -> Violation:
    report = ViolationReport(cfg.program, cfg.strategy, rs.tape.prefix(), steps, path, kind,
                             serialize_mem(rs.mem), msg)
    return Violation(report, trail)


def entry_check(rs: RunState, tree: CTree) -> Optional[str]:
    if not footprint_ok(rs.mem, tree.pre):
        return f"inv * pre does not hold initially ({pretty(tree.pre)})"
    return None


def advance(rs: RunState, tree: CTree, cfg: RunConfig, steps: int = 0, trail: tuple = (),
            final_post: Optional[Callable[[Any], SlProp]] = None) -> Any:
    """Step until an outcome; returns :class:`Branch` if the tape runs out at a choice."""
    final_post = final_post or cfg.post or tree.post
    while not isinstance(tree, Ret):
        if steps >= cfg.bound:
            return BoundExceeded(rs.mem, steps, rs.tape.prefix(), "steps", trail)
        m0 = rs.mem
        try:
            rs1, t1, path = step(rs, tree)
        except TapeExhausted:
            return Branch(rs, tree, steps, trail, final_post)
        except CheckViolation as e:
            at = getattr(e, "rs", None) or rs
            return _violation(cfg, at, steps, getattr(e, "path", "") or "", e.kind, e.message, trail)
        except (ConstructionError, PcmError, HistoryError) as e:
            return _violation(cfg, rs, steps, "", construction_kind(e), str(e), trail)
        try:
            post_step_check(m0, rs1.mem, tree.pre, t1.pre, cfg.check_frames)
        except CheckViolation as e:
            return _violation(cfg, rs1, steps + 1, path, e.kind, e.message, trail)
        if cfg.record:
            trail = trail + (rs1.mem,)
        rs, tree, steps = replace(rs1, step_count=rs1.step_count + 1), t1, steps + 1
    x = tree.value
    final = Star(istore_inv(rs.mem.istore), final_post(x))
    if not interp(final, rs.mem):
        return _violation(cfg, rs, steps, "Ret", "postcondition",
                          f"inv * post does not hold at the end ({pretty(final_post(x))})", trail)
    if cfg.check is not None:
        msg = cfg.check(x, rs.mem)
        if msg:
            return _violation(cfg, rs, steps, "Ret", "check", msg, trail)
    return Completed(x, rs.mem, steps, rs.tape.prefix(), trail)


def run(tree: CTree, rs: Optional[RunState] = None, cfg: Optional[RunConfig] = None,
        tape: Optional[Tape] = None) -> Any:
    """Run ``tree`` to an outcome.  A finite tape that runs out yields :class:`Incomplete`."""
    cfg = cfg or RunConfig()
    rs = rs or RunState()
    if tape is not None:
        rs = replace(rs, tape=tape)
    why = entry_check(rs, tree)
    if why is not None:
        return _violation(cfg, rs, 0, "", "precondition", why, ())
    trail = (rs.mem,) if cfg.record else ()
    out = advance(rs, tree, cfg, 0, trail, cfg.post or tree.post)
    if isinstance(out, Branch):
        return Incomplete(out.rs.mem, out.steps, out.rs.tape.prefix())
    return out


__all__ = [
    "BoundExceeded", "Branch", "Completed", "Incomplete", "Pruned", "RunConfig", "Violation",
    "ViolationReport", "advance", "describe", "entry_check", "post_step_check", "run", "step",
]
