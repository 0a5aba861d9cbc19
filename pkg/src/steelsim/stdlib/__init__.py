"""Libraries checked by running them: locks, fork/join, monotonic refs, examples."""

from __future__ import annotations

from .examples import Counter, IStoreView, LLNode, llist_inv, new_ctr, protects
from .forkjoin import ThreadHandle, fork, join, new_thread, thread_inv
from .locks import (
    CriticalFlag,
    Lock,
    LockRef,
    acquire,
    enter_critical,
    exit_critical,
    lock_of,
    lockinv,
    new_critical_flag,
    new_lock,
    release,
)
from .mref import MRef, Observed, new_mref, owned, read_mref, recall_mref, witness_mref, write_mref
