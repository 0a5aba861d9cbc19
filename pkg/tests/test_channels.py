from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from steelsim.channels import (
    INT,
    ChanVal,
    MsgType,
    PDoWhile,
    PMsg,
    PRet,
    ProtocolError,
    chan_inv,
    closure_extends,
    extend_1,
    extend_trace,
    get_trace,
    history_dup,
    hnf,
    more,
    msg_t,
    new_chan,
    proto_bind,
    proto_step,
    receiver,
    recv,
    send,
    sender,
    trace_extends,
    trace_of,
    traces_upto,
    waiting,
    xy,
    xy_loop,
)
from steelsim.channels.protocol import _Const, do_while
from steelsim.explorer import ExhaustiveStrategy, Program, explore
from steelsim.semantics import BoundExceeded, Completed, RunConfig, bind, par, ret, run
from steelsim.slprop import interp
from steelsim.substrate import Tape

BIT = MsgType("bit", lambda x: x in (0, 1), (0, 1))


# protocols ------------------------------------------------------------------


def observe(p, depth=3, domain=(0, 1, 2, 17, 18)):
    """Observable behaviour of ``p``: accepted messages and results, to ``depth`` messages."""
    h = hnf(p)
    if isinstance(h, PRet):
        return ("ret", h.value)
    if depth == 0:
        return ("more",)
    return ("msg", tuple((m, observe(h.k(m), depth - 1, domain)) for m in domain if h.msg.accepts(m)))


@pytest.mark.parametrize("p", [PRet(3), PMsg(BIT, _Const(PRet(1))), xy()])
def test_bind_left_and_right_identity(p):
    k = _Const(PMsg(BIT, _Const(PRet("k"))))
    assert proto_bind(PRet(5), k) == k(5)
    assert observe(proto_bind(p, PRet)) == observe(p)


SMALL = [PRet(0), PMsg(BIT, PRet), PMsg(BIT, _Const(PMsg(BIT, PRet))), xy()]
CONTS = [PRet, _Const(PMsg(BIT, PRet)), lambda x: PMsg(BIT, _Const(PRet(x)))]


def test_bind_associative_on_small_protocols():
    for p, k1, k2 in itertools.product(SMALL, CONTS, CONTS):
        lhs = proto_bind(proto_bind(p, k1), k2)
        rhs = proto_bind(p, lambda x, k1=k1, k2=k2: proto_bind(k1(x), k2))
        assert observe(lhs) == observe(rhs)


def test_dowhile_body_shape():
    body = proto_bind(xy(), _Const(PRet(True)))
    loop = xy_loop()
    assert isinstance(loop, PDoWhile) and loop.body == body


def test_hnf_examples():
    assert hnf(PRet(1)) == PRet(1)
    m = PMsg(BIT, PRet)
    assert hnf(m) is m
    unfolded = hnf(do_while(proto_bind(xy(), _Const(PRet(True))), PRet(())))
    assert isinstance(unfolded, PMsg) and unfolded.msg is INT


def test_dowhile_rejects_silent_body():
    with pytest.raises(ProtocolError):
        PDoWhile(PRet(True), PRet(()))


def test_dowhile_loops_and_exits():
    loop = do_while(PMsg(BIT, lambda b: PRet(b == 1)), PRet("out"))
    assert more(proto_step(loop, 1))
    assert hnf(proto_step(loop, 0)) == PRet("out")


def test_more_msg_t_step():
    assert not more(PRet(()))
    p = xy()
    assert msg_t(p).accepts(5) and msg_t(p).accepts(17)
    tail = proto_step(p, 17)
    assert msg_t(tail).accepts(18)
    assert not msg_t(tail).accepts(19)
    assert not more(proto_step(tail, 18))
    with pytest.raises(ProtocolError):
        proto_step(tail, 99)
    with pytest.raises(ProtocolError):
        proto_step(PRet(()), 1)


# traces ---------------------------------------------------------------------


def test_extend_1():
    t = extend_1(waiting(xy()), 17)
    assert t.messages == (17,)
    assert msg_t(t.end).accepts(18) and not msg_t(t.end).accepts(17)
    with pytest.raises(ProtocolError):
        extend_1(trace_of(xy(), [1, 2]), 3)


def test_trace_extends_reflexive():
    t = trace_of(xy(), [1])
    assert trace_extends(t, t)
    assert not trace_extends(trace_of(xy(), [1, 2]), t)


@pytest.mark.parametrize("p", [PMsg(BIT, _Const(PMsg(BIT, _Const(PMsg(BIT, _Const(PMsg(BIT, PRet))))))),
                               do_while(PMsg(BIT, lambda b: PRet(b == 1)))])
def test_prefix_decision_matches_closure(p):
    universe = traces_upto(p, 4, (0, 1))
    for t0, t1 in itertools.product(universe, repeat=2):
        assert trace_extends(t0, t1) == closure_extends(t0, t1, universe)


def test_trace_json():
    d = trace_of(xy(), [3, 4]).to_dict()
    assert d["messages"] == [3, 4]
    assert d["end_state_fingerprint"] == trace_of(xy(), [3, 4]).to_dict()["end_state_fingerprint"]


@settings(max_examples=40)
@given(st.lists(st.sampled_from((0, 1)), max_size=6), st.integers(0, 6))
def test_prefixes_are_extended(msgs, cut):
    p = do_while(PMsg(BIT, lambda b: PRet(True)))
    t = trace_of(p, msgs)
    pre = trace_of(p, msgs[:cut])
    assert trace_extends(pre, t)


# channel values -------------------------------------------------------------


def test_chanval_rejects_bad_message():
    with pytest.raises(ProtocolError):
        ChanVal(proto_step(xy(), 1), 5, 1)
    assert ChanVal(xy(), 1, 1).after == proto_step(xy(), 1)


def test_new_chan_rejects_finished_protocol():
    with pytest.raises(ProtocolError):
        new_chan(PRet(()))


# channel programs -----------------------------------------------------------


def _fresh(then):
    return bind(new_chan(xy()), then)


def test_new_chan_states_and_invariant():
    out = run(_fresh(ret))
    assert isinstance(out, Completed)
    c = out.value
    assert interp(sender(c, xy()), out.mem) and interp(receiver(c, xy()), out.mem)
    assert len(out.mem.istore) == 1
    assert interp(chan_inv(c), out.mem)


def test_get_trace_on_fresh_channel():
    out = run(_fresh(get_trace))
    assert isinstance(out, Completed)
    assert out.value.trace == waiting(xy())
    assert history_dup(out.value) == (out.value, out.value)


def test_send_moves_sender_state():
    out = run(_fresh(lambda c: bind(send(c, xy(), 17), lambda _: ret(c))))
    assert isinstance(out, Completed)
    assert interp(sender(out.value, proto_step(xy(), 17)), out.mem)


def test_second_message_must_be_successor():
    out = run(_fresh(lambda c: ret(c)))
    with pytest.raises(ProtocolError):
        send(out.value, proto_step(xy(), 17), 99)


def test_two_sends_without_recv_spin():
    prog = _fresh(lambda c: bind(send(c, xy(), 17), lambda _: send(c, proto_step(xy(), 17), 18)))
    out = run(prog, cfg=RunConfig(bound=300))
    assert isinstance(out, BoundExceeded)


def test_recv_gets_the_sent_message_on_every_tape():
    def body(c):
        return par(send(c, xy(), 17), recv(c, xy()))

    rep = explore(Program("send_recv", lambda: _fresh(body), check=lambda v, m: None if v[1] == 17 else repr(v)),
                  ExhaustiveStrategy(30))
    assert rep.violations == 0 and rep.completed > 0


def test_extend_trace_after_one_message():
    def body(c):
        return bind(get_trace(c), lambda h0: bind(
            par(send(c, xy(), 17), recv(c, xy())), lambda _: bind(
                extend_trace(c, proto_step(xy(), 17), h0), lambda h1: ret((h0, h1)))))

    out = run(_fresh(body), tape=Tape.parse("1" * 200))
    assert isinstance(out, Completed)
    h0, h1 = out.value
    assert trace_extends(h0.trace, h1.trace)
    assert h1.trace.messages == h0.trace.messages + (17,)
