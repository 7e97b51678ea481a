"""ERICA and ERICA+ explicit-rate allocation for one switch output port.

The port measures ABR input, VBR/CBR load and the set of active VCs over
averaging intervals.  At the end of each interval it recomputes the ABR
capacity, the overload factor and the fair share; backward RM cells passing
through are then stamped with::

    er_for_vc = max(fair_share, ccr[vc] / overload)
    cell.er   = min(cell.er, er_for_vc)

ERICA+ replaces the fixed utilization target with a capacity that shrinks
hyperbolically as the ABR queue grows past a target queueing delay.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .cells import BACKWARD_RM, FORWARD_RM, VBR_DATA, Cell
from .engine import PS_PER_MS, PS_PER_S, PS_PER_US, Simulator


class Scheme(str, Enum):
    ERICA = "erica"
    ERICA_PLUS = "erica+"


@dataclass
class EricaPlusParams:
    t0: int = 500 * PS_PER_US  # target queueing delay, ticks
    b: float = 1.05
    qdlf: float = 0.5

    def __post_init__(self) -> None:
        if not self.b > 1:
            raise ValueError("ERICA+ hyperbola parameter b must exceed 1")
        if not 0 < self.qdlf < 1:
            raise ValueError("ERICA+ queue drain limit must lie in (0, 1)")
        if self.t0 <= 0:
            raise ValueError("ERICA+ target delay must be positive")


def queue_control_factor(q: float, q0: float, b: float, qdlf: float) -> float:
    """Hyperbolic queue-control factor, clamped to ``[qdlf, 1]``."""
    f = b * q0 / ((b - 1.0) * q0 + q)
    if f > 1.0:
        return 1.0
    if f < qdlf:
        return qdlf
    return f


class EricaPortState:
    """Measurement and allocation state of one ERICA output port.

    Rates are cells/s, times are ticks.  The object is passive: callers feed
    it forward cells, close intervals, and hand it backward RM cells.
    """

    def __init__(
        self,
        link_rate: float,
        target_utilization: float = 0.9,
        interval_len_time: int = PS_PER_MS,
        interval_len_cells: int = 100,
        cbr_reserved: float = 0.0,
        scheme: Scheme = Scheme.ERICA,
        qplus: EricaPlusParams | None = None,
        clamp_er_to_capacity: bool = True,
        overload_floor: float = 0.05,
        capacity_floor: float = 10.0,
    ) -> None:
        if not 0 < target_utilization <= 1:
            raise ValueError("target utilization must lie in (0, 1]")
        self.link_rate = float(link_rate)
        self.target_utilization = target_utilization
        self.interval_len_time = interval_len_time
        self.interval_len_cells = interval_len_cells
        self.cbr_reserved = cbr_reserved
        self.scheme = Scheme(scheme)
        self.qplus = qplus if qplus is not None else EricaPlusParams()
        self.clamp_er_to_capacity = clamp_er_to_capacity
        self.overload_floor = overload_floor
        self.capacity_floor = capacity_floor

        self.interval_start = 0
        self.abr_input_count = 0
        self.vbr_cbr_count = 0
        self.active_vcs: set[int] = set()
        self.ccr_table: dict[int, float] = {}

        self.intervals = 0
        self.input_rate = 0.0
        self.vbr_rate = 0.0
        self.overload = 1.0
        self.fair_share = 0.0
        self.abr_capacity = self.target_rate()
        self.n_active = 0
        self.trace: list[tuple[int, float, float, float, int, float]] | None = None

    def target_rate(self) -> float:
        return self.target_utilization * self.link_rate

    def queue_control_capacity(self, q: float, vbr_rate: float | None = None) -> float:
        """ERICA+ capacity target for an ABR queue of ``q`` cells."""
        if vbr_rate is None:
            vbr_rate = self.vbr_rate
        available = self.link_rate - vbr_rate - self.cbr_reserved
        if available <= 0:
            return 0.0
        p = self.qplus
        q0 = p.t0 * available / PS_PER_S
        return queue_control_factor(q, q0, p.b, p.qdlf) * available

    def observe_forward_cell(self, c: Cell) -> bool:
        """Account one forward cell; True when the cell-count limit closes the interval."""
        if c.kind is VBR_DATA:
            self.vbr_cbr_count += 1
            return False
        self.abr_input_count += 1
        self.active_vcs.add(c.vc)
        if c.kind is FORWARD_RM:
            self.ccr_table[c.vc] = c.ccr
        return self.abr_input_count >= self.interval_len_cells

    def end_interval(self, now: int, abr_queue: int = 0) -> None:
        elapsed = now - self.interval_start
        if elapsed <= 0:
            elapsed = 1
        seconds = elapsed / PS_PER_S
        self.vbr_rate = self.vbr_cbr_count / seconds
        if self.scheme is Scheme.ERICA_PLUS:
            target = self.queue_control_capacity(abr_queue, self.vbr_rate)
            capacity = target
        else:
            capacity = self.target_rate() - self.vbr_rate - self.cbr_reserved
        self.abr_capacity = max(capacity, self.capacity_floor)
        self.input_rate = self.abr_input_count / seconds
        self.overload = max(self.input_rate / self.abr_capacity, self.overload_floor)
        self.n_active = len(self.active_vcs)
        self.fair_share = self.abr_capacity / max(self.n_active, 1)
        self.intervals += 1
        if self.trace is not None:
            self.trace.append(
                (now, self.abr_capacity, self.input_rate, self.overload, self.n_active, self.fair_share)
            )
        self.interval_start = now
        self.abr_input_count = 0
        self.vbr_cbr_count = 0
        self.active_vcs = set()

    def er_for_vc(self, vc: int) -> float:
        vc_share = self.ccr_table.get(vc, 0.0) / self.overload
        er = self.fair_share if self.fair_share > vc_share else vc_share
        if self.clamp_er_to_capacity and er > self.abr_capacity:
            er = self.abr_capacity
        return er

    def stamp_backward_rm(self, c: Cell) -> None:
        if c.kind is not BACKWARD_RM or self.intervals == 0:
            return
        er = self.er_for_vc(c.vc)
        if er < c.er:
            c.er = er


class EricaAgent:
    """Drives an :class:`EricaPortState` from the event kernel.

    An interval closes after ``interval_len_time`` or ``interval_len_cells``
    ABR input cells, whichever comes first.
    """

    def __init__(self, sim: Simulator, state: EricaPortState, abr_queue: Callable[[], int]) -> None:
        self.sim = sim
        self.state = state
        self.abr_queue = abr_queue
        self._gen = 0
        state.interval_start = sim.now()
        self._arm()

    def _arm(self) -> None:
        self._gen += 1
        self.sim.schedule(self.state.interval_start + self.state.interval_len_time, self._timeout, self._gen)

    def _timeout(self, gen: int) -> None:
        if gen == self._gen:
            self._close()

    def _close(self) -> None:
        self.state.end_interval(self.sim._now, self.abr_queue())
        self._arm()

    def on_forward(self, c: Cell) -> None:
        if self.state.observe_forward_cell(c):
            self._close()

    def on_backward(self, c: Cell) -> None:
        self.state.stamp_backward_rm(c)
