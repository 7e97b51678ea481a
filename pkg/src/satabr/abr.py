"""ABR/UBR end systems.

The source paces cells at its allowed cell rate (ACR) and sends an in-rate
forward RM cell as every ``nrm``-th cell.  The destination turns forward RM
cells around into backward RM cells carrying ER = PCR; switches on the way
back lower the ER, and the source adopts ``min(ER, PCR)`` as its new ACR.

In UBR mode the source sends at PCR whenever it has cells and ignores RM
cells entirely.
"""

from __future__ import annotations

from collections import deque
from enum import Enum
from typing import Callable, Iterable

from .cells import BACKWARD_RM, DATA, FORWARD_RM, Cell, Link
from .engine import PS_PER_S, Simulator


class Service(str, Enum):
    ABR = "abr"
    UBR = "ubr"


class AbrSource:
    def __init__(
        self,
        sim: Simulator,
        vc: int,
        link: Link,
        pcr: float,
        icr: float | None = None,
        nrm: int = 32,
        service: Service = Service.ABR,
        mcr_floor: float = 10.0,
    ) -> None:
        self.sim = sim
        self.vc = vc
        self.link = link
        self.pcr = float(pcr)
        self.service = Service(service)
        self.nrm = nrm
        self.mcr_floor = mcr_floor
        if self.service is Service.UBR:
            self.acr = self.pcr
        else:
            self.acr = min(float(icr) if icr is not None else self.pcr / 32, self.pcr)
        self.tx_backlog: deque[Cell] = deque()
        self.cells_since_rm = nrm - 1  # first cell out is a forward RM
        self.emitted = 0
        self.rm_emitted = 0
        self.last_tx: int | None = None
        self._pending_at: int | None = None
        self._gen = 0
        self.acr_trace: list[tuple[int, float]] | None = None

    def gap(self) -> int:
        return round(PS_PER_S / self.acr)

    def next_slot(self) -> int:
        now = self.sim._now
        if self.last_tx is None:
            return now
        t = self.last_tx + self.gap()
        return t if t > now else now

    def enqueue(self, cells: Iterable[Cell]) -> None:
        self.tx_backlog.extend(cells)
        if self._pending_at is None and self.tx_backlog:
            self._arm(self.next_slot())

    def _arm(self, at: int) -> None:
        self._gen += 1
        self._pending_at = at
        self.sim.schedule(at, self._emit, self._gen)

    def _emit(self, gen: int) -> None:
        if gen != self._gen:
            return
        self._pending_at = None
        if not self.tx_backlog:
            return
        now = self.sim._now
        if self.service is Service.ABR and self.cells_since_rm >= self.nrm - 1:
            cell = Cell(FORWARD_RM, self.vc, now, er=self.pcr, ccr=self.acr)
            self.cells_since_rm = 0
            self.rm_emitted += 1
        else:
            cell = self.tx_backlog.popleft()
            cell.created_at = now
            self.cells_since_rm += 1
        self.last_tx = now
        self.emitted += 1
        self.link.transmit(cell)
        if self.tx_backlog:
            self._arm(now + self.gap())

    def on_backward_rm(self, c: Cell) -> None:
        if self.service is Service.UBR:
            return
        acr = c.er if c.er < self.pcr else self.pcr
        if acr < self.mcr_floor:
            acr = self.mcr_floor
        self.acr = acr
        if self.acr_trace is not None:
            self.acr_trace.append((self.sim._now, acr))
        # A faster rate may pull the pending slot forward.
        if self._pending_at is not None and self.last_tx is not None:
            t = self.last_tx + self.gap()
            if t < self._pending_at:
                self._arm(max(t, self.sim._now))


class AbrDestination:
    """Consumes forward cells for one VC and turns forward RM cells around."""

    def __init__(
        self,
        sim: Simulator,
        vc: int,
        reverse_link: Link,
        pcr: float,
        on_data: Callable[[Cell], None] | None = None,
    ) -> None:
        self.sim = sim
        self.vc = vc
        self.reverse_link = reverse_link
        self.pcr = float(pcr)
        self.on_data = on_data
        self.received = 0
        self.injected = 0

    def turnaround(self, c: Cell) -> Cell:
        return Cell(BACKWARD_RM, c.vc, self.sim._now, er=self.pcr, ccr=c.ccr)

    def receive(self, c: Cell) -> None:
        self.received += 1
        if c.kind is FORWARD_RM:
            self.send_reverse(self.turnaround(c))
        elif c.kind is DATA and self.on_data is not None:
            self.on_data(c)

    def send_reverse(self, c: Cell) -> None:
        self.injected += 1
        self.reverse_link.transmit(c)
