"""Deterministic ON-OFF VBR background source."""

from __future__ import annotations

from typing import Callable

from .cells import VBR_DATA, Cell
from .engine import PS_PER_MS, PS_PER_S, Simulator

VBR_VC = -1


class VbrSource:
    """Emits VBR cells at ``peak_rate`` during ON periods, nothing during OFF.

    Period ``k`` starts at ``start_at + k * (on_time + off_time)``.  Cell ``i``
    of a period leaves at ``period_start + floor(i / peak_rate)``; only cells
    whose whole slot fits inside the ON time are sent.
    """

    def __init__(
        self,
        sim: Simulator,
        out: Callable[[Cell], object],
        peak_rate: float,
        on_time: int = PS_PER_MS,
        off_time: int = PS_PER_MS,
        start_at: int = 2 * PS_PER_MS,
        vc: int = VBR_VC,
    ) -> None:
        self.sim = sim
        self.out = out
        self.peak_rate = peak_rate
        self.on_time = on_time
        self.off_time = off_time
        self.start_at = start_at
        self.vc = vc
        self.cells_per_on = int(on_time * peak_rate // PS_PER_S)
        self.emitted = 0
        self.periods = 0
        self._period_start = start_at
        self._i = 0

    @property
    def period(self) -> int:
        return self.on_time + self.off_time

    def phase_at(self, t: int) -> str:
        if t < self.start_at:
            return "OFF"
        return "ON" if (t - self.start_at) % self.period < self.on_time else "OFF"

    def start(self) -> None:
        if self.cells_per_on > 0:
            self.sim.schedule(self.start_at, self._tick)

    def slot(self, i: int) -> int:
        return int(i * PS_PER_S // self.peak_rate)

    def _tick(self, _: object = None) -> None:
        self.emitted += 1
        self.out(Cell(VBR_DATA, self.vc, self.sim._now))
        self._i += 1
        if self._i >= self.cells_per_on:
            self._i = 0
            self.periods += 1
            self._period_start += self.period
        self.sim.schedule(self._period_start + self.slot(self._i), self._tick)
