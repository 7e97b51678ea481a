import pytest

import oracles
from satabr.cells import DATA, Cell
from satabr.engine import Simulator, ms
from satabr.tcp import (
    Encapsulation,
    Reassembler,
    Segment,
    TcpReceiver,
    TcpSender,
    segment_to_cells,
    window_in_cells,
)

MSS = 512
RCVWND = 34000 * 2**8


def make_sender(rcvwnd=RCVWND, rto=None):
    sim = Simulator()
    out = []
    snd = TcpSender(sim, out.append, mss=MSS, rcvwnd=rcvwnd, rto=rto)
    return sim, snd, out


def test_default_window_is_scaled():
    assert RCVWND == 8_704_000


def test_fresh_connection_sends_one_segment():
    _, snd, out = make_sender()
    snd.start()
    assert [(s.seq, s.len) for s in out] == [(0, 512)]


def test_whole_mss_only():
    _, snd, out = make_sender()
    snd.cwnd = 1000
    snd.try_send()
    assert len(out) == 1


def test_full_window_sends_nothing():
    _, snd, out = make_sender()
    snd.start()
    out.clear()
    assert snd.try_send() == 0


def test_slow_start_doubling_step():
    _, snd, _ = make_sender()
    snd.start()
    snd.on_ack(512)
    assert snd.cwnd == 1024


def test_old_and_duplicate_acks_ignored():
    _, snd, _ = make_sender()
    snd.start()
    snd.on_ack(512)
    snd.on_ack(512)
    snd.on_ack(0)
    assert snd.cwnd == 1024 and snd.snd_una == 512


def test_cwnd_capped_at_rcvwnd():
    _, snd, _ = make_sender(rcvwnd=4 * MSS)
    snd.cwnd = 4 * MSS
    snd.snd_nxt = 4 * MSS
    snd.on_ack(MSS)
    assert snd.cwnd == 4 * MSS


def test_congestion_avoidance_increment():
    _, snd, _ = make_sender()
    snd.start()
    snd.ssthresh = snd.cwnd = 10 * MSS
    snd.snd_nxt = 10 * MSS
    snd.on_ack(MSS)
    assert snd.cwnd == 10 * MSS + MSS * MSS // (10 * MSS)


def ack_loop(snd, out):
    """Acknowledge every emitted segment in order, one at a time."""
    i = 0
    while i < len(out) and snd.stats.rcvwnd_round is None:
        seg = out[i]
        snd.on_ack(seg.seq + seg.len)
        i += 1


def test_rounds_to_reach_window_match_oracle():
    _, snd, out = make_sender()
    snd.start()
    ack_loop(snd, out)
    assert snd.stats.rcvwnd_round == oracles.slow_start_rounds(RCVWND, MSS) == 15


def test_round_start_cwnd_doubles():
    _, snd, out = make_sender()
    snd.start()
    ack_loop(snd, out)
    starts = snd.stats.round_start_cwnd
    assert starts == [min(2**k * MSS, RCVWND) for k in range(len(starts))]


def test_outstanding_never_exceeds_window():
    _, snd, out = make_sender(rcvwnd=40 * MSS)
    snd.start()
    i = 0
    while i < 500:
        seg = out[i]
        snd.on_ack(seg.seq + seg.len)
        assert snd.snd_nxt - snd.snd_una <= min(snd.cwnd, snd.rcvwnd)
        i += 1


@pytest.mark.parametrize(
    "payload, header, trailer",
    [(512, 40, 8), (512, 0, 0), (1, 40, 8), (0, 40, 8), (1460, 40, 8)],
)
def test_cells_per_segment(payload, header, trailer):
    enc = Encapsulation(header, trailer)
    cells = segment_to_cells(Segment(0, payload), 0, encap=enc)
    assert len(cells) == oracles.cells_per_segment(payload, header, trailer)
    assert [c.last for c in cells] == [False] * (len(cells) - 1) + [True]


def test_default_encapsulation_numbers():
    assert Encapsulation().cells_for(512) == 12
    assert Encapsulation(0, 0).cells_for(512) == 11
    assert Encapsulation().cells_for(1) == 2
    assert window_in_cells(RCVWND, MSS) == 204_000


def make_receiver():
    sim = Simulator()
    acks = []
    rcv = TcpReceiver(sim, acks.append)
    reasm = Reassembler(rcv.on_segment)
    return rcv, reasm, acks


def feed(reasm, seg, drop=()):
    for i, c in enumerate(segment_to_cells(seg, 0)):
        if i not in drop:
            reasm.push(c)


def test_in_order_segment_is_acked():
    rcv, reasm, acks = make_receiver()
    feed(reasm, Segment(0, 512))
    assert [a.ack_no for a in acks] == [512]


def test_out_of_order_segment_gives_duplicate_ack():
    rcv, reasm, acks = make_receiver()
    feed(reasm, Segment(512, 512))
    assert [a.ack_no for a in acks] == [0]
    feed(reasm, Segment(0, 512))
    assert acks[-1].ack_no == 1024


def test_segment_missing_a_cell_is_discarded():
    rcv, reasm, acks = make_receiver()
    feed(reasm, Segment(0, 512), drop={5})
    assert acks == [] and rcv.rcv_nxt == 0
    assert reasm.discarded == 1


def test_segment_missing_last_cell_is_never_delivered():
    rcv, reasm, acks = make_receiver()
    feed(reasm, Segment(0, 512), drop={11})
    feed(reasm, Segment(512, 512))
    assert rcv.rcv_nxt == 0
    assert [a.ack_no for a in acks] == [0]


def test_ack_is_one_cell():
    cells = segment_to_cells(Segment(0, 0, is_ack=True, ack_no=5), 0)
    assert len(cells) == 1 and cells[0].last and cells[0].kind is DATA


def test_delayed_ack_every_other_segment():
    sim = Simulator()
    acks = []
    rcv = TcpReceiver(sim, acks.append, delayed_ack=True, delack_timeout=ms(100))
    for k in range(4):
        rcv.on_segment(Segment(k * 512, 512))
    assert [a.ack_no for a in acks] == [1024, 2048]
    rcv.on_segment(Segment(2048, 512))
    sim.run_until(ms(200))
    assert acks[-1].ack_no == 2560


# ---- timeouts ----------------------------------------------------------------

def test_timeout_resets_cwnd_and_goes_back():
    sim, snd, out = make_sender(rto=ms(10))
    snd.start()
    for _ in range(3):
        seg = out[len(out) - 1]
        snd.on_ack(seg.seq + seg.len)
    assert snd.cwnd > MSS
    una = snd.snd_una
    outstanding = snd.snd_max - snd.snd_una
    sim.run_until(ms(50))
    assert snd.stats.timeouts >= 1
    assert snd.stats.retransmits >= 1
    assert out[-1].seq == una  # oldest unacked data resent
    assert snd.ssthresh == max(outstanding // 2, 2 * MSS)
    assert snd.cwnd == MSS


def test_timer_rearmed_by_new_acks():
    sim, snd, out = make_sender(rto=ms(10))
    snd.start()
    for step in range(1, 6):
        sim.run_until(ms(8 * step))
        seg = out[-1]
        snd.on_ack(seg.seq + seg.len)
    assert snd.stats.timeouts == 0
