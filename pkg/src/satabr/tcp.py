"""Loss-free TCP sender and receiver carried over ATM cells.

Slow start and congestion avoidance follow Jacobson's rules with byte
sequence numbers.  The sender always has data (infinite application
source) and only emits whole-MSS segments.  Segments are encapsulated
AAL5-style: payload + TCP/IP header + trailer, padded to a whole number of
48-byte cell payloads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .cells import CELL_PAYLOAD, DATA, Cell
from .engine import Simulator


@dataclass
class Segment:
    seq: int
    len: int
    is_ack: bool = False
    ack_no: int = 0
    ncells: int = 0


@dataclass
class Encapsulation:
    header_overhead: int = 40
    trailer: int = 8
    cell_payload: int = CELL_PAYLOAD

    def cells_for(self, nbytes: int) -> int:
        return max(1, math.ceil((nbytes + self.header_overhead + self.trailer) / self.cell_payload))


def segment_to_cells(seg: Segment, vc: int, now: int = 0, encap: Encapsulation | None = None) -> list[Cell]:
    """Split a segment into cells; the last one carries the end-of-segment mark."""
    encap = encap or Encapsulation()
    n = encap.cells_for(seg.len)
    seg.ncells = n
    cells = [Cell(DATA, vc, now, seg=seg) for _ in range(n)]
    cells[-1].last = True
    return cells


def window_in_cells(rcvwnd: int, mss: int, encap: Encapsulation | None = None) -> int:
    encap = encap or Encapsulation()
    return math.ceil(rcvwnd / mss) * encap.cells_for(mss)


class Reassembler:
    """Rebuilds segments from an in-order cell stream of one VC.

    A segment is handed on only if all of its cells arrived; a segment that
    lost any cell is silently discarded.
    """

    def __init__(self, deliver: Callable[[Segment], None]) -> None:
        self.deliver = deliver
        self._seg: Segment | None = None
        self._count = 0
        self.discarded = 0

    def push(self, c: Cell) -> None:
        if c.seg is not self._seg:
            self._seg = c.seg
            self._count = 0
        self._count += 1
        if c.last:
            seg = self._seg
            complete = self._count == seg.ncells
            self._seg = None
            self._count = 0
            if complete:
                self.deliver(seg)
            else:
                self.discarded += 1


@dataclass
class TcpStats:
    segments_sent: int = 0
    retransmits: int = 0
    timeouts: int = 0
    acks_received: int = 0
    # cwnd (bytes) at the start of each sequence round; round k is index k-1
    round_start_cwnd: list[int] = field(default_factory=list)
    rcvwnd_round: int | None = None


class TcpSender:
    def __init__(
        self,
        sim: Simulator,
        emit: Callable[[Segment], None],
        mss: int = 512,
        rcvwnd: int = 34000 * 2**8,
        rto: int | None = None,
    ) -> None:
        self.sim = sim
        self.emit = emit
        self.mss = mss
        self.rcvwnd = rcvwnd
        self.cwnd = mss
        self.ssthresh = rcvwnd
        self.snd_una = 0
        self.snd_nxt = 0
        self.snd_max = 0
        self.rto = rto
        self.stats = TcpStats()
        self.round = 0
        self._round_end = 0
        self._deadline: int | None = None
        self._timer_armed = False
        self.cwnd_trace: list[tuple[int, int, int, int]] | None = None

    def start(self) -> None:
        self._begin_round()
        self.try_send()
        self._round_end = self.snd_nxt

    def _begin_round(self) -> None:
        self.round += 1
        self.stats.round_start_cwnd.append(self.cwnd)

    def window(self) -> int:
        return self.cwnd if self.cwnd < self.rcvwnd else self.rcvwnd

    def try_send(self) -> int:
        limit = self.snd_una + self.window()
        mss = self.mss
        sent = 0
        while self.snd_nxt + mss <= limit:
            seg = Segment(self.snd_nxt, mss)
            if self.snd_nxt < self.snd_max:
                self.stats.retransmits += 1
            self.snd_nxt += mss
            if self.snd_nxt > self.snd_max:
                self.snd_max = self.snd_nxt
            self.stats.segments_sent += 1
            sent += 1
            self.emit(seg)
        if sent:
            self._arm_timer()
        return sent

    def on_ack(self, ack_no: int) -> None:
        if ack_no <= self.snd_una:
            return
        acked = ack_no - self.snd_una
        self.snd_una = ack_no
        if self.snd_nxt < self.snd_una:
            self.snd_nxt = self.snd_una
        self.stats.acks_received += 1
        if self.cwnd < self.ssthresh:
            self.cwnd += self.mss * max(1, acked // self.mss)
        else:
            self.cwnd += max(1, self.mss * self.mss // self.cwnd)
        if self.cwnd > self.rcvwnd:
            self.cwnd = self.rcvwnd
        if self.cwnd >= self.rcvwnd and self.stats.rcvwnd_round is None:
            self.stats.rcvwnd_round = self.round
        new_round = self.snd_una >= self._round_end
        if new_round:
            self._begin_round()
        if self.rto is not None:
            self._deadline = self.sim._now + self.rto
        self.try_send()
        if new_round:
            self._round_end = self.snd_nxt
        if self.cwnd_trace is not None:
            self.cwnd_trace.append((self.sim._now, self.cwnd, self.snd_una, self.snd_nxt))

    def on_ack_segment(self, seg: Segment) -> None:
        self.on_ack(seg.ack_no)

    def _arm_timer(self) -> None:
        if self.rto is None:
            return
        if self._deadline is None or not self._timer_armed:
            self._deadline = self.sim._now + self.rto
        if not self._timer_armed:
            self._timer_armed = True
            self.sim.schedule(self._deadline, self._check_timer)

    def _check_timer(self, _: object = None) -> None:
        self._timer_armed = False
        if self.snd_una >= self.snd_max:
            return
        now = self.sim._now
        if self._deadline is not None and now < self._deadline:
            self._timer_armed = True
            self.sim.schedule(self._deadline, self._check_timer)
            return
        self.on_timeout()

    def on_timeout(self) -> None:
        outstanding = self.snd_max - self.snd_una
        self.ssthresh = max(outstanding // 2, 2 * self.mss)
        self.cwnd = self.mss
        self.snd_nxt = self.snd_una
        self.stats.timeouts += 1
        self._deadline = None
        self.try_send()


class TcpReceiver:
    """Cumulative-ACK receiver; ACKs every segment unless ``delayed_ack``."""

    def __init__(
        self,
        sim: Simulator,
        send_ack: Callable[[Segment], None],
        delayed_ack: bool = False,
        delack_timeout: int | None = None,
    ) -> None:
        self.sim = sim
        self.send_ack = send_ack
        self.rcv_nxt = 0
        self.out_of_order: dict[int, int] = {}
        self.delivered_bytes = 0
        self.acks_sent = 0
        self.delayed_ack = delayed_ack
        self.delack_timeout = delack_timeout
        self._unacked_segments = 0
        self._delack_gen = 0

    def on_segment(self, seg: Segment) -> None:
        if seg.seq == self.rcv_nxt:
            self.rcv_nxt += seg.len
            while self.rcv_nxt in self.out_of_order:
                self.rcv_nxt += self.out_of_order.pop(self.rcv_nxt)
            self.delivered_bytes = self.rcv_nxt
            if self.delayed_ack:
                self._unacked_segments += 1
                if self._unacked_segments >= 2:
                    self._ack()
                elif self.delack_timeout is not None:
                    self._delack_gen += 1
                    self.sim.schedule(self.sim._now + self.delack_timeout, self._delack_fire, self._delack_gen)
                return
        elif seg.seq > self.rcv_nxt:
            self.out_of_order.setdefault(seg.seq, seg.len)
        self._ack()

    def _delack_fire(self, gen: int) -> None:
        if gen == self._delack_gen and self._unacked_segments:
            self._ack()

    def _ack(self) -> None:
        self._unacked_segments = 0
        self._delack_gen += 1
        self.acks_sent += 1
        self.send_ack(Segment(self.rcv_nxt, 0, is_ack=True, ack_no=self.rcv_nxt))
