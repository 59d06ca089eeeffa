"""ABR end systems: a rate-paced source and an RM-turnaround destination.

The source follows the explicit-rate subset of the ATM Forum source rules:
ACR is set straight from the ER carried by backward RM cells (bounded by PCR
and a small positive floor), and one in-rate cell in every ``nrm`` is a
forward RM cell.
"""

from __future__ import annotations

from collections import deque
from heapq import heappush
from typing import Callable

from abrsim.engine import PS_PER_SECOND, Simulator
from abrsim.errors import ProtocolError
from abrsim.fabric import BACKWARD_RM, DATA, FORWARD_RM, Cell

NRM = 32
DEFAULT_ACR_FLOOR = 1000.0


def gap_ps(rate: float) -> int:
    """Inter-cell gap in picoseconds at ``rate`` cells/s."""
    return round(PS_PER_SECOND / rate)


class AbrSource:
    """Per-VC source end system.

    Frames submitted with :meth:`submit` are segmented into cells and sent at
    ACR. ``emit`` receives every outgoing cell (normally the access port's
    ``enqueue``). When nothing is pending the pacing timer is parked and it
    restarts no earlier than one gap after the previous emission, which is
    indistinguishable from a free-running clock that found no data.
    """

    def __init__(
        self,
        sim: Simulator,
        vc,
        pcr: float,
        icr: float | None = None,
        acr_floor: float = DEFAULT_ACR_FLOOR,
        emit: Callable[[Cell], object] | None = None,
        nrm: int = NRM,
    ):
        icr = pcr if icr is None else icr
        if not 0 < acr_floor <= pcr:
            raise ValueError("need 0 < acr_floor <= pcr")
        if not 0 < icr <= pcr:
            raise ValueError("need 0 < icr <= pcr")
        self.sim = sim
        self.vc = vc
        self.pcr = float(pcr)
        self.icr = float(icr)
        self.acr = float(icr)
        self.acr_floor = float(acr_floor)
        self.nrm = nrm
        self.nrm_counter = 0
        self.emit = emit
        self.pending: deque[list] = deque()  # [frame, cells_left]
        self.pending_cells = 0
        self._gap = gap_ps(self.acr)
        self._timer = None
        self._last_emit: int | None = None
        self.cells_sent = 0
        self.data_cells_sent = 0
        self.rm_cells_sent = 0
        self.brm_received = 0
        self.last_er: float | None = None

    def submit(self, frame, ncells: int) -> None:
        if ncells <= 0:
            raise ValueError("a frame occupies at least one cell")
        self.pending.append([frame, ncells])
        self.pending_cells += ncells
        if self._timer is None:
            self._arm()

    @property
    def backlogged(self) -> bool:
        return self.pending_cells > 0

    def _arm(self) -> None:
        now = self.sim.now
        t = now if self._last_emit is None else max(now, self._last_emit + self._gap)
        self._timer = self.sim.schedule(t, self._tick)

    def next_transmission(self) -> Cell | None:
        """Pick the next in-rate cell, or None when idle."""
        if self.nrm_counter == self.nrm - 1:
            self.nrm_counter = 0
            self.rm_cells_sent += 1
            return Cell(self.vc, FORWARD_RM, er=self.pcr, ccr=self.acr)
        pending = self.pending
        if not pending:
            return None
        head = pending[0]
        head[1] -= 1
        self.pending_cells -= 1
        eom = head[1] == 0
        if eom:
            pending.popleft()
        self.nrm_counter += 1
        self.data_cells_sent += 1
        return Cell(self.vc, DATA, frame=head[0], eom=eom)

    def _tick(self) -> None:
        cell = self.next_transmission()
        if cell is None:
            self._timer = None
            return
        sim = self.sim
        now = sim.now
        self._last_emit = now
        self.cells_sent += 1
        self.emit(cell)
        # inlined Simulator.schedule
        entry = [now + self._gap, next(sim._seq), self._tick, ()]
        heappush(sim._heap, entry)
        sim.scheduled += 1
        self._timer = entry

    def on_backward_rm(self, rm: Cell) -> None:
        if rm.kind is not BACKWARD_RM or rm.vc != self.vc:
            raise ProtocolError(f"source {self.vc!r} got {rm!r}")
        self.brm_received += 1
        self.last_er = rm.er
        acr = min(rm.er, self.pcr)
        if acr < self.acr_floor:
            acr = self.acr_floor
        if acr == self.acr:
            return
        self.acr = acr
        self._gap = gap_ps(acr)
        # re-time a pending emission to the new gap
        if self._timer is not None and self._last_emit is not None:
            self.sim.cancel(self._timer)
            self._arm()


class AbrDestination:
    """Turns forward RM cells around; ``reply`` takes the backward RM."""

    def __init__(self, vc, reply: Callable[[Cell], object] | None = None):
        self.vc = vc
        self.reply = reply
        self.turned_around = 0

    def turnaround(self, frm: Cell) -> Cell:
        if frm.kind is not FORWARD_RM:
            raise ProtocolError(f"turnaround of non-FRM {frm!r}")
        self.turned_around += 1
        return Cell(frm.vc, BACKWARD_RM, er=frm.er, ccr=frm.ccr)

    def on_forward_rm(self, frm: Cell) -> None:
        self.reply(self.turnaround(frm))
