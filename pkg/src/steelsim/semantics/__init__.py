"""Action trees, atomic actions, and the checking interpreter."""

from __future__ import annotations

from .actions import (
    Action,
    IVal,
    alloc,
    cas,
    compose_atomic,
    concrete_projection,
    execute,
    free,
    ghost_alloc,
    ghost_read,
    ghost_write,
    istore_inv,
    new_invariant,
    noop,
    read,
    read_frac,
    with_invariant,
    write,
    write_frac,
)
from .ctree import Act, Bind, CTree, Frame, Par, Ret, Sub, act, bind, frame, measure, par, ret, seq, sub
from .interpreter import (
    BoundExceeded,
    Completed,
    Incomplete,
    Pruned,
    RunConfig,
    Violation,
    ViolationReport,
    run,
    step,
)
