"""ATM cells, links and FIFO output ports.

A port is modelled as a work-conserving FIFO in front of a link. Instead of
scheduling a "transmission complete" event per cell, the port keeps the end
of its departure schedule and schedules each cell's far-end arrival when the
cell is accepted. Depth only rises on arrivals, so the high-water mark taken
at arrivals is exact.
"""

from __future__ import annotations

import enum
import math
from heapq import heappush
from typing import Callable

from abrsim.engine import PS_PER_SECOND, Simulator

CELL_BYTES = 53
CELL_BITS = CELL_BYTES * 8
CELL_PAYLOAD_BYTES = 48

# 5 us/km: with the three-hop n-source path this gives RTT = 30 ms at 1000 km.
PROPAGATION_PS_PER_KM = 5_000_000

OC3_BPS = 155.52e6


class CellKind(enum.IntEnum):
    DATA = 0
    FORWARD_RM = 1
    BACKWARD_RM = 2


DATA = CellKind.DATA
FORWARD_RM = CellKind.FORWARD_RM
BACKWARD_RM = CellKind.BACKWARD_RM


class Cell:
    """One 53-byte cell.

    ``er``/``ccr`` are cell rates in cells/s and are only meaningful on RM
    cells. Data cells carry the AAL5 frame they belong to and an
    end-of-message flag on the frame's last cell.
    """

    __slots__ = ("vc", "kind", "er", "ccr", "frame", "eom")

    def __init__(self, vc, kind=DATA, er=None, ccr=None, frame=None, eom=False):
        self.vc = vc
        self.kind = kind
        self.er = er
        self.ccr = ccr
        self.frame = frame
        self.eom = eom

    @classmethod
    def rm(cls, vc, kind, er: float, ccr: float) -> "Cell":
        if kind is DATA:
            raise ValueError("RM constructor needs an RM kind")
        if not er > 0 or ccr < 0:
            raise ValueError(f"invalid RM fields er={er} ccr={ccr}")
        return cls(vc, kind, er=er, ccr=ccr)

    def __repr__(self) -> str:
        if self.kind is DATA:
            return f"Cell(vc={self.vc!r}, DATA, eom={self.eom})"
        return f"Cell(vc={self.vc!r}, {self.kind.name}, er={self.er:.1f}, ccr={self.ccr:.1f})"


def cell_rate(link_rate_bps: float) -> float:
    """Cells per second a link of the given bit rate can carry."""
    return link_rate_bps / CELL_BITS


def cell_time_ps(link_rate_bps: float) -> int:
    return round(CELL_BITS * PS_PER_SECOND / link_rate_bps)


def propagation_ps(length_km: float) -> int:
    return round(length_km * PROPAGATION_PS_PER_KM)


class Link:
    def __init__(self, rate_bps: float = OC3_BPS, length_km: float = 0.0):
        if rate_bps <= 0:
            raise ValueError("link rate must be positive")
        if length_km < 0:
            raise ValueError("link length must be non-negative")
        self.rate_bps = rate_bps
        self.length_km = length_km
        self.cell_time = cell_time_ps(rate_bps)
        self.prop_delay = propagation_ps(length_km)

    @property
    def cell_rate(self) -> float:
        return cell_rate(self.rate_bps)

    def __repr__(self) -> str:
        return f"Link({self.rate_bps / 1e6:.2f} Mbps, {self.length_km:g} km)"


class OutputPort:
    """Drop-tail FIFO feeding one link.

    ``sink`` is called with each cell when it has fully arrived at the far
    end of the link. ``capacity=None`` means an unbounded buffer.

    Depth counts cells accepted but not yet completely transmitted. A
    backlogged port sends back to back, so depth at time ``t`` is
    ``ceil((busy_until - t) / cell_time)`` and no per-cell bookkeeping is
    needed.
    """

    def __init__(
        self,
        sim: Simulator,
        link: Link,
        sink: Callable[[Cell], None] | None = None,
        capacity: int | None = None,
        name: str = "",
    ):
        if capacity is not None and capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.sim = sim
        self.link = link
        self.sink = sink
        self.capacity = capacity
        self._limit = math.inf if capacity is None else capacity
        self.name = name
        self._cell_time = link.cell_time
        self._prop = link.prop_delay
        self._busy_until = 0
        self.max_depth = 0
        self.max_depth_at = 0
        self.drops = 0
        self.drops_by_vc: dict = {}
        self.accepted = 0
        self.trace: list[tuple[int, int]] | None = None

    def enable_trace(self) -> None:
        self.trace = []

    def queue_depth(self) -> int:
        backlog = self._busy_until - self.sim.now
        return -(-backlog // self._cell_time) if backlog > 0 else 0

    @property
    def busy(self) -> bool:
        return self._busy_until > self.sim.now

    def enqueue(self, cell: Cell) -> bool:
        """Accept the cell or drop it if the buffer is full (drop-tail)."""
        sim = self.sim
        now = sim.now
        ct = self._cell_time
        busy_until = self._busy_until
        if busy_until > now:
            depth = -((now - busy_until) // ct)
            end = busy_until + ct
        else:
            depth = 0
            end = now + ct
        if depth >= self._limit:
            self.drops += 1
            self.drops_by_vc[cell.vc] = self.drops_by_vc.get(cell.vc, 0) + 1
            return False
        self._busy_until = end
        depth += 1
        self.accepted += 1
        if depth > self.max_depth:
            self.max_depth = depth
            self.max_depth_at = now
        if self.trace is not None:
            self.trace.append((now, depth))
        # inlined Simulator.schedule; arrival is never in the past
        heappush(sim._heap, [end + self._prop, next(sim._seq), self.sink, (cell,)])
        sim.scheduled += 1
        return True

    def __repr__(self) -> str:
        return f"OutputPort({self.name!r}, {self.link!r}, depth={self.queue_depth()})"
