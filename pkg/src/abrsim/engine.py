"""Discrete-event core.

Time is an integer count of picoseconds. Events live in a binary heap keyed
by ``(fire_at, seq)`` where ``seq`` is a global insertion counter, so events
that share a timestamp run in the order they were scheduled.

Heap entries are plain lists ``[fire_at, seq, fn, args]`` and double as the
cancellation handle: cancelling (or firing) sets ``fn`` to ``None``.
"""

from __future__ import annotations

import enum
import heapq
import itertools
from dataclasses import dataclass
from typing import Any, Callable

from abrsim.errors import SchedulingError

PS_PER_SECOND = 10**12
PS_PER_MS = 10**9
PS_PER_US = 10**6

EventHandle = list


def seconds(s: float) -> int:
    return round(s * PS_PER_SECOND)


def ms(value: float) -> int:
    return round(value * PS_PER_MS)


def us(value: float) -> int:
    return round(value * PS_PER_US)


def to_seconds(t: int) -> float:
    return t / PS_PER_SECOND


class CancelResult(enum.Enum):
    CANCELLED = "cancelled"
    ALREADY_FIRED = "already_fired"


@dataclass(frozen=True)
class ExecutionStats:
    executed: int
    final_time: int


class Simulator:
    def __init__(self, trace: bool = False) -> None:
        self.now = 0
        self._heap: list[list] = []
        self._seq = itertools.count()
        self.scheduled = 0
        self.executed = 0
        self.cancelled = 0
        # (fire_at, seq, name) per executed event, only when tracing
        self.trace: list[tuple[int, int, str]] | None = [] if trace else None

    def schedule(self, fire_at: int, fn: Callable[..., Any], *args: Any) -> EventHandle:
        if fire_at < self.now:
            raise SchedulingError(f"event at {fire_at} ps scheduled from {self.now} ps")
        entry = [fire_at, next(self._seq), fn, args]
        heapq.heappush(self._heap, entry)
        self.scheduled += 1
        return entry

    def schedule_in(self, delay: int, fn: Callable[..., Any], *args: Any) -> EventHandle:
        return self.schedule(self.now + delay, fn, *args)

    def cancel(self, handle: EventHandle) -> CancelResult:
        if handle[2] is None:
            return CancelResult.ALREADY_FIRED
        handle[2] = None
        handle[3] = ()
        self.cancelled += 1
        return CancelResult.CANCELLED

    @property
    def pending(self) -> int:
        return self.scheduled - self.executed - self.cancelled

    def pending_events(self):
        """Live heap entries, in no particular order."""
        return [e for e in self._heap if e[2] is not None]

    def run_until(self, t_end: int) -> ExecutionStats:
        heap = self._heap
        pop = heapq.heappop
        trace = self.trace
        count = 0
        while heap and heap[0][0] <= t_end:
            entry = pop(heap)
            fn = entry[2]
            if fn is None:
                continue
            entry[2] = None
            self.now = entry[0]
            count += 1
            if trace is not None:
                trace.append((entry[0], entry[1], getattr(fn, "__qualname__", repr(fn))))
            fn(*entry[3])
        self.executed += count
        if t_end > self.now:
            self.now = t_end
        return ExecutionStats(executed=count, final_time=self.now)
