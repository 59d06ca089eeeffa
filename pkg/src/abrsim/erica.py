"""ERICA explicit-rate allocation for one switch output port.

Per averaging interval the port counts arriving ABR cells and the set of VCs
that sent them. At the end of an interval::

    z          = (cells / interval) / abr_capacity        (overload factor)
    fair_share = abr_capacity / n_active

and each backward RM cell of a VC leaving through this port's reverse
direction is stamped with::

    er = min(er, min(max(fair_share, ccr / z), link cell rate))

where ``ccr`` is the rate the VC last advertised in a forward RM cell.
"""

from __future__ import annotations

from dataclasses import dataclass

from abrsim.engine import PS_PER_SECOND, Simulator, ms
from abrsim.fabric import FORWARD_RM, Cell

Z_FLOOR = 0.01


@dataclass(frozen=True)
class EricaParams:
    target_utilization: float = 0.90
    interval_time: int = ms(1)  # ps
    interval_cells: int = 100

    def __post_init__(self):
        if not 0 < self.target_utilization <= 1:
            raise ValueError("target utilization must be in (0, 1]")
        if self.interval_time <= 0 or self.interval_cells <= 0:
            raise ValueError("averaging interval limits must be positive")


def interval_boundary(start: int, cells: int, params: EricaParams, now: int) -> bool:
    """Whether an interval begun at ``start`` with ``cells`` arrivals is over."""
    return now - start >= params.interval_time or cells >= params.interval_cells


def averaging_interval_length(params: EricaParams, link_cell_rate: float) -> int:
    """Shortest possible interval: the time limit or the count limit at line rate."""
    by_count = round(params.interval_cells * PS_PER_SECOND / link_cell_rate)
    return min(params.interval_time, by_count)


class EricaPort:
    def __init__(
        self,
        params: EricaParams,
        link_cell_rate: float,
        sim: Simulator | None = None,
        start: int = 0,
    ):
        self.params = params
        self.link_cell_rate = float(link_cell_rate)
        self.abr_capacity = params.target_utilization * self.link_cell_rate
        self.sim = sim
        self.start = start
        self.cells = 0
        self.active_vcs: set = set()
        self.last_ccr: dict = {}
        self.z = 1.0
        self.n_active = 0
        self.fair_share = self.abr_capacity
        self.input_rate = 0.0
        self.intervals = 0
        self.depth_probe = None  # callable returning the port's queue depth
        self.trace: list[tuple] | None = None
        self._timer = None
        if sim is not None:
            self._arm_timer()

    def _arm_timer(self) -> None:
        self._timer = self.sim.schedule(self.start + self.params.interval_time, self._on_timer)

    def _on_timer(self) -> None:
        self._timer = None
        self.end_interval(self.sim.now)

    def on_cell_arrival(self, cell: Cell, now: int) -> None:
        params = self.params
        if now - self.start >= params.interval_time:
            self.end_interval(now)
        self.cells += 1
        self.active_vcs.add(cell.vc)
        if cell.kind is FORWARD_RM:
            self.last_ccr[cell.vc] = cell.ccr
        if self.cells >= params.interval_cells:
            self.end_interval(now)

    def end_interval(self, now: int) -> None:
        elapsed = now - self.start
        if elapsed <= 0:
            return
        n = len(self.active_vcs)
        if n:
            self.input_rate = self.cells * PS_PER_SECOND / elapsed
            z = self.input_rate / self.abr_capacity
            self.z = z if z > Z_FLOOR else Z_FLOOR
            self.n_active = n
            self.fair_share = self.abr_capacity / n
        self.intervals += 1
        if self.trace is not None:
            depth = self.depth_probe() if self.depth_probe is not None else 0
            self.trace.append((now, self.z, self.n_active, self.fair_share, depth))
        self.start = now
        self.cells = 0
        self.active_vcs = set()
        if self.sim is not None:
            if self._timer is not None:
                self.sim.cancel(self._timer)
            self._arm_timer()

    def explicit_rate(self, vc) -> float:
        vc_share = self.last_ccr.get(vc, 0.0) / self.z
        er = self.fair_share if self.fair_share > vc_share else vc_share
        return er if er < self.link_cell_rate else self.link_cell_rate

    def stamp_backward_rm(self, brm: Cell) -> Cell:
        er = self.explicit_rate(brm.vc)
        if er < brm.er:
            brm.er = er
        return brm
