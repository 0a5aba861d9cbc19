"""Protocols, traces, and protocol-checked channels."""

from __future__ import annotations

from .chan import (
    Chan,
    ChanVal,
    History,
    chan_inv,
    extend_trace,
    final_trace,
    get_trace,
    history_dup,
    new_chan,
    receiver,
    recv,
    send,
    sender,
)
from .protocol import (
    INT,
    MsgType,
    PDoWhile,
    PMsg,
    PRet,
    Protocol,
    ProtocolError,
    Trace,
    closure_extends,
    extend_1,
    hnf,
    is_next,
    more,
    msg_t,
    proto_bind,
    proto_step,
    trace_extends,
    trace_of,
    traces_upto,
    waiting,
    xy,
    xy_loop,
)
