"""ATM cells, point-to-point links and output-queued switch ports."""

from __future__ import annotations

from collections import deque
from enum import IntEnum
from typing import Any, Callable

from .engine import PS_PER_MS, PS_PER_S, Simulator

CELL_BYTES = 53
CELL_PAYLOAD = 48


class CellKind(IntEnum):
    DATA = 0
    FORWARD_RM = 1
    BACKWARD_RM = 2
    VBR_DATA = 3


DATA = CellKind.DATA
FORWARD_RM = CellKind.FORWARD_RM
BACKWARD_RM = CellKind.BACKWARD_RM
VBR_DATA = CellKind.VBR_DATA


class Cell:
    """One 53-byte cell.

    ``er`` and ``ccr`` are only meaningful on RM cells.  ``seg`` points at the
    TCP segment a data cell carries a piece of; ``last`` marks the cell that
    closes that segment (the AAL5 end-of-frame indication).
    """

    __slots__ = ("kind", "vc", "er", "ccr", "seg", "last", "created_at")

    def __init__(
        self,
        kind: CellKind,
        vc: int,
        created_at: int = 0,
        er: float = 0.0,
        ccr: float = 0.0,
        seg: Any = None,
        last: bool = False,
    ) -> None:
        self.kind = kind
        self.vc = vc
        self.created_at = created_at
        self.er = er
        self.ccr = ccr
        self.seg = seg
        self.last = last

    def __repr__(self) -> str:
        return f"Cell({self.kind.name}, vc={self.vc}, t={self.created_at})"


def cell_time(rate_cells_per_s: float) -> int:
    """Serialization time of one cell, in ticks, at the given rate."""
    return round(PS_PER_S / rate_cells_per_s)


class Link:
    """Unidirectional link with serialization and propagation delay.

    A cell handed to a busy link waits behind the cells already accepted, so
    the link behaves as an implicit FIFO.  Cells between ``transmit`` and
    delivery are counted in ``in_flight``.
    """

    __slots__ = ("sim", "cell_tx_time", "prop_delay", "busy_until", "sink", "in_flight", "sent", "name")

    def __init__(
        self,
        sim: Simulator,
        rate_cells_per_s: float,
        prop_delay: int,
        sink: Callable[[Cell], None] | None = None,
        name: str = "",
    ) -> None:
        if prop_delay < 0:
            raise ValueError(f"negative propagation delay on link {name!r}")
        self.sim = sim
        self.cell_tx_time = cell_time(rate_cells_per_s)
        self.prop_delay = prop_delay
        self.busy_until = 0
        self.sink = sink
        self.in_flight = 0
        self.sent = 0
        self.name = name

    def transmit(self, cell: Cell) -> int:
        """Accept ``cell`` for transmission; returns its delivery time at the far end."""
        now = self.sim._now
        start = self.busy_until if self.busy_until > now else now
        self.busy_until = start + self.cell_tx_time
        deliver_at = self.busy_until + self.prop_delay
        self.in_flight += 1
        self.sent += 1
        self.sim.schedule(deliver_at, self._arrive, cell)
        return deliver_at

    def _arrive(self, cell: Cell) -> None:
        self.in_flight -= 1
        self.sink(cell)


class DepthRecorder:
    """Queue-depth series compressed to the per-window maximum.

    One row per ``window`` ticks: ``(window_index, abr_max, total_max)``.
    Windows with no transitions repeat the depth held over them.
    """

    def __init__(self, window: int = PS_PER_MS) -> None:
        self.window = window
        self.rows: list[tuple[int, int, int]] = []
        self._w = 0
        self._abr_max = 0
        self._total_max = 0
        self._abr = 0
        self._total = 0

    def record(self, t: int, abr: int, total: int) -> None:
        w = t // self.window
        if w != self._w:
            self._roll(w)
        if abr > self._abr_max:
            self._abr_max = abr
        if total > self._total_max:
            self._total_max = total
        self._abr = abr
        self._total = total

    def _roll(self, w: int) -> None:
        self.rows.append((self._w, self._abr_max, self._total_max))
        for k in range(self._w + 1, w):
            self.rows.append((k, self._abr, self._total))
        self._w = w
        self._abr_max = self._abr
        self._total_max = self._total

    def finish(self, t_end: int) -> list[tuple[int, int, int]]:
        """Close every window up to ``t_end`` (exclusive of a trailing empty one)."""
        last = max((t_end - 1) // self.window, self._w)
        if last != self._w:
            self._roll(last)
        rows = self.rows + [(self._w, self._abr_max, self._total_max)]
        return rows


class PortQueues:
    """Two class FIFOs (VBR and ABR) in front of one output link."""

    ACCEPTED = True
    DROPPED = False

    def __init__(self, capacity: int | None = None, recorder: DepthRecorder | None = None) -> None:
        self.abr_fifo: deque[Cell] = deque()
        self.vbr_fifo: deque[Cell] = deque()
        self.capacity = capacity
        self.max_abr_depth = 0
        self.max_total_depth = 0
        self.drop_count = 0
        self.recorder = recorder

    def __len__(self) -> int:
        return len(self.abr_fifo) + len(self.vbr_fifo)

    def enqueue(self, cell: Cell, now: int = 0) -> bool:
        abr, vbr = self.abr_fifo, self.vbr_fifo
        if self.capacity is not None and len(abr) + len(vbr) >= self.capacity:
            self.drop_count += 1
            return self.DROPPED
        if cell.kind is VBR_DATA:
            vbr.append(cell)
        else:
            abr.append(cell)
        na = len(abr)
        nt = na + len(vbr)
        if na > self.max_abr_depth:
            self.max_abr_depth = na
        if nt > self.max_total_depth:
            self.max_total_depth = nt
        if self.recorder is not None:
            self.recorder.record(now, na, nt)
        return self.ACCEPTED

    def dequeue(self, now: int = 0) -> Cell | None:
        """Strict priority: VBR head first, then ABR head, else ``None``."""
        if self.vbr_fifo:
            cell = self.vbr_fifo.popleft()
        elif self.abr_fifo:
            cell = self.abr_fifo.popleft()
        else:
            return None
        if self.recorder is not None:
            na = len(self.abr_fifo)
            self.recorder.record(now, na, na + len(self.vbr_fifo))
        return cell


class OutputPort:
    """Switch output port: class queues draining onto a link, one cell at a time.

    Scheduling is non-preemptive; a VBR cell that arrives while an ABR cell
    is on the wire waits for that cell to finish.
    """

    def __init__(self, sim: Simulator, link: Link, queues: PortQueues | None = None) -> None:
        self.sim = sim
        self.link = link
        self.queues = queues if queues is not None else PortQueues()
        self.busy = False
        self.abr_sent = 0
        self.vbr_sent = 0
        self.busy_time = 0
        self.on_arrival: Callable[[Cell], None] | None = None

    def arrive(self, cell: Cell) -> bool:
        if self.on_arrival is not None:
            self.on_arrival(cell)
        accepted = self.queues.enqueue(cell, self.sim._now)
        if accepted and not self.busy:
            self._start()
        return accepted

    def _start(self) -> None:
        cell = self.queues.dequeue(self.sim._now)
        if cell is None:
            self.busy = False
            return
        self.busy = True
        if cell.kind is VBR_DATA:
            self.vbr_sent += 1
        else:
            self.abr_sent += 1
        self.link.transmit(cell)
        self.busy_time += self.link.cell_tx_time
        self.sim.schedule(self.link.busy_until, self._done)

    def _done(self, _: Any = None) -> None:
        self._start()
