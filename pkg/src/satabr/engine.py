"""Discrete-event kernel.

Time is an integer count of picoseconds.  Events fire in ``(fire_at, seqno)``
order, so two events scheduled for the same instant run in the order they
were scheduled.
"""

from __future__ import annotations

import heapq
from typing import Any, Callable

PS_PER_US = 1_000_000
PS_PER_MS = 1_000_000_000
PS_PER_S = 1_000_000_000_000


def ms(value: float) -> int:
    """Convert milliseconds to integer ticks."""
    return round(value * PS_PER_MS)


def to_ms(ticks: int) -> float:
    return ticks / PS_PER_MS


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current time."""


class Simulator:
    __slots__ = ("_now", "_seq", "_queue", "dispatched")

    def __init__(self) -> None:
        self._now = 0
        self._seq = 0
        self._queue: list[tuple[int, int, Callable[[Any], None], Any]] = []
        self.dispatched = 0

    def now(self) -> int:
        return self._now

    def schedule(self, fire_at: int, handler: Callable[[Any], None], payload: Any = None) -> int:
        """Queue ``handler(payload)`` to run at ``fire_at``; returns the seqno."""
        if fire_at < self._now:
            raise SchedulingError(
                f"event for {handler!r} at t={fire_at} ps is before now={self._now} ps"
            )
        self._seq += 1
        heapq.heappush(self._queue, (fire_at, self._seq, handler, payload))
        return self._seq

    def schedule_in(self, delay: int, handler: Callable[[Any], None], payload: Any = None) -> int:
        return self.schedule(self._now + delay, handler, payload)

    def pending(self) -> int:
        return len(self._queue)

    def peek_time(self) -> int | None:
        return self._queue[0][0] if self._queue else None

    def run_until(self, t_end: int) -> int:
        """Dispatch every event with ``fire_at <= t_end``; leaves ``now() == t_end``."""
        if t_end < self._now:
            raise SchedulingError(f"run_until({t_end}) is before now={self._now}")
        queue = self._queue
        pop = heapq.heappop
        count = 0
        while queue and queue[0][0] <= t_end:
            fire_at, _, handler, payload = pop(queue)
            self._now = fire_at
            handler(payload)
            count += 1
        self._now = t_end
        self.dispatched += count
        return count
