"""Scheduling strategies and interleaving-space search.

Exhaustive mode is a depth-first backtracking search.  Every branch point is
a choice the tape could not resolve; both continuations resume from the
same immutable ``(RunState, tree)`` snapshot, so no run is replayed from
scratch.  Depth counts tape bits.

Spin loops make the raw tape space exponential in the depth, so by default
states reached at a branch point are deduplicated on a structural key of
(tree, memory, witness labels): a state already explored with no more bits and
no more steps consumed cannot produce new outcomes within the bounds.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

from .errors import ConstructionError, HistoryError, PcmError, SteelsimError
from .memory import Mem
from .semantics.ctree import CTree
from .semantics.interpreter import (
    DEFAULT_STEP_BOUND,
    BoundExceeded,
    Branch,
    Completed,
    Incomplete,
    Pruned,
    RunConfig,
    Violation,
    advance,
    construction_kind,
    entry_check,
    _violation,
)
from .substrate import RunState, Tape
from .values import fingerprint


# ---------------------------------------------------------------------------
# Programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Program:
    name: str
    build: Callable[[], CTree]
    description: str = ""
    post: Optional[Callable[[Any], Any]] = None
    check: Optional[Callable[[Any, Mem], Optional[str]]] = None
    bound: int = DEFAULT_STEP_BOUND


REGISTRY: dict = {}


def register(p: Program) -> Program:
    REGISTRY[p.name] = p
    return p


def get_program(name: str) -> Program:
    from . import programs  # noqa: F401  (populates the registry)

    try:
        return REGISTRY[name]
    except KeyError:
        raise SteelsimError(f"unknown program {name!r}; try `steelsim list`") from None


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TapeStrategy:
    bits: str

    def label(self) -> str:
        return f"tape:{self.bits}"


@dataclass(frozen=True)
class RandomStrategy:
    seed: int
    n: int

    def label(self) -> str:
        return f"random:{self.seed}:{self.n}"


@dataclass(frozen=True)
class ExhaustiveStrategy:
    max_depth: int = 20
    dedup: bool = True

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError("exhaustive max_depth must be at least 1")

    def label(self) -> str:
        return "exhaustive"


def parse_strategy(s: str, depth: int = 20) -> Any:
    kind, _, rest = s.partition(":")
    if kind == "tape":
        Tape.parse(rest)
        return TapeStrategy(rest)
    if kind == "random":
        seed, _, n = rest.partition(":")
        return RandomStrategy(int(seed), int(n or 1))
    if kind == "exhaustive" and not rest:
        return ExhaustiveStrategy(depth)
    raise ValueError(f"unknown strategy {s!r}")


def depth_cap(depth: int) -> int:
    cap = os.environ.get("STEELSIM_DEPTH_CAP")
    return min(depth, int(cap)) if cap else depth


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class ExplorationReport:
    program: str
    strategy: str
    completed: int = 0
    bound_exceeded: int = 0
    violations: int = 0
    pruned: int = 0
    reports: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def total(self) -> int:
        return self.completed + self.bound_exceeded + self.violations + self.pruned

    def add(self, out: Any, keep: bool) -> None:
        if isinstance(out, Completed):
            self.completed += 1
        elif isinstance(out, (BoundExceeded, Incomplete)):
            self.bound_exceeded += 1
        elif isinstance(out, Violation):
            self.violations += 1
            self.reports.append(out.report)
        elif isinstance(out, Pruned):
            self.pruned += 1
        if keep:
            self.outcomes.append(out)

    def finish(self) -> None:
        self.reports.sort(key=lambda r: (r.tape, r.step_index))

    def summary(self) -> str:
        return (f"{self.program} [{self.strategy}]: runs={self.total} completed={self.completed} "
                f"bound_exceeded={self.bound_exceeded} violations={self.violations} "
                f"pruned={self.pruned} time={self.wall_time:.2f}s")

    def to_dict(self) -> dict:
        return {
            "program": self.program,
            "strategy": self.strategy,
            "total_runs": self.total,
            "completed": self.completed,
            "bound_exceeded": self.bound_exceeded,
            "violations": self.violations,
            "pruned": self.pruned,
            "wall_time": round(self.wall_time, 3),
            "violation_reports": [r.to_dict() for r in self.reports],
        }


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------


def _config(prog: Program, strategy: Any, record: bool, bound: Optional[int]) -> RunConfig:
    return RunConfig(program=prog.name, strategy=strategy.label(), bound=bound or prog.bound,
                     post=prog.post, check=prog.check, record=record)


def _start(prog: Program, cfg: RunConfig, tape: Tape) -> Any:
    rs = RunState(tape=tape)
    try:
        tree = prog.build()
    except (ConstructionError, PcmError, HistoryError) as e:
        return _violation(cfg, rs, 0, "", construction_kind(e), str(e), ())
    why = entry_check(rs, tree)
    if why is not None:
        return _violation(cfg, rs, 0, "", "precondition", why, ())
    trail = (rs.mem,) if cfg.record else ()
    return advance(rs, tree, cfg, 0, trail, cfg.post or tree.post)


def replay(prog: Any, bits: str, record: bool = False, bound: Optional[int] = None,
           strategy: Optional[str] = None) -> Any:
    """Deterministically re-execute ``prog`` on a finite tape.

    ``strategy`` overrides the label written into violation reports, so a
    report found by a search replays to an identical report.
    """
    prog = get_program(prog) if isinstance(prog, str) else prog
    cfg = _config(prog, TapeStrategy(bits), record, bound)
    if strategy is not None:
        cfg.strategy = strategy
    out = _start(prog, cfg, Tape.parse(bits))
    if isinstance(out, Branch):
        return Incomplete(out.rs.mem, out.steps, out.rs.tape.prefix())
    return out


def replay_report(report: Any, prog: Any = None, bound: Optional[int] = None) -> Optional[Any]:
    """Replay a violation report's tape; returns the new report (``None`` if no violation)."""
    out = replay(prog or report.program, report.tape, bound=bound, strategy=report.strategy)
    return out.report if isinstance(out, Violation) else None


class _StateKeys:
    """Structural keys for dedup; keeps every keyed object alive so ids stay unique."""

    def __init__(self) -> None:
        self._fp: dict = {}

    def _cached(self, obj: Any) -> Any:
        k = id(obj)
        hit = self._fp.get(k)
        if hit is None:
            hit = (obj, fingerprint(obj))
            self._fp[k] = hit
        return hit[1]

    def key(self, rs: RunState, tree: CTree) -> Any:
        m = rs.mem
        heap = tuple((a, c.type_tag, c.pcm_id, c.erased, fingerprint(c.value))
                     for a, c in sorted(m.heap.items()))
        istore = tuple(self._cached(p) for p in m.istore)
        labels = tuple(w.label for w in rs.witnesses)
        return (fingerprint(tree), heap, m.ctr, istore, labels)


def explore(prog: Any, strategy: Any, record: bool = False, keep_outcomes: bool = False,
            bound: Optional[int] = None) -> ExplorationReport:
    prog = get_program(prog) if isinstance(prog, str) else prog
    t0 = time.perf_counter()
    report = ExplorationReport(prog.name, strategy.label())
    cfg = _config(prog, strategy, record, bound)
    if isinstance(strategy, TapeStrategy):
        out = _start(prog, cfg, Tape.parse(strategy.bits))
        if isinstance(out, Branch):
            out = Incomplete(out.rs.mem, out.steps, out.rs.tape.prefix())
        report.add(out, keep_outcomes)
    elif isinstance(strategy, RandomStrategy):
        for i in range(strategy.n):
            seed = strategy.seed * 1_000_003 + i
            report.add(_start(prog, cfg, Tape(seed=seed)), keep_outcomes)
    elif isinstance(strategy, ExhaustiveStrategy):
        _exhaustive(prog, cfg, depth_cap(strategy.max_depth), strategy.dedup, report, keep_outcomes)
    else:
        raise SteelsimError(f"unknown strategy {strategy!r}")
    report.wall_time = time.perf_counter() - t0
    report.finish()
    return report


def _exhaustive(prog: Program, cfg: RunConfig, max_depth: int, dedup: bool,
                report: ExplorationReport, keep: bool) -> None:
    keys = _StateKeys()
    visited: dict = {}
    stack = [_start(prog, cfg, Tape(()))]
    while stack:
        out = stack.pop()
        if not isinstance(out, Branch):
            report.add(out, keep)
            continue
        bits = out.rs.tape.bits
        if len(bits) >= max_depth:
            report.add(BoundExceeded(out.rs.mem, out.steps, out.rs.tape.prefix(), "depth", out.trail), keep)
            continue
        if dedup:
            k = keys.key(out.rs, out.tree)
            seen = visited.get(k)
            if seen is not None and seen[0] <= len(bits) and seen[1] <= out.steps:
                report.add(Pruned(out.rs.tape.prefix()), keep)
                continue
            visited[k] = (len(bits), out.steps)
        # push the 0-branch first so the 1-branch (left-first) is explored first
        for b in (False, True):
            rs = replace(out.rs, tape=replace(out.rs.tape, bits=bits + (b,)))
            stack.append(advance(rs, out.tree, cfg, out.steps, out.trail, out.final_post))
