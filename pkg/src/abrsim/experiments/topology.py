"""The n-source configuration.

    source i --access_i--> switch 1 ==trunk==> switch 2 --egress_i--> dest i

Every hop has a reverse link carrying backward RM cells and TCP ACKs. ERICA
runs on switch 1's trunk port (the measured bottleneck) and on switch 2's
egress ports; both stamp backward RM cells on their way back to the source.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from abrsim.abr import AbrDestination, AbrSource
from abrsim.engine import Simulator
from abrsim.erica import EricaPort
from abrsim.fabric import BACKWARD_RM, DATA, FORWARD_RM, Cell, Link, OutputPort
from abrsim.tcp import Segment, TcpReceiver, TcpSender, segment_to_cells
from abrsim.experiments.config import ScenarioConfig


class Reassembler:
    """AAL5 receive side: a frame is delivered only if all its cells arrived."""

    def __init__(self, deliver):
        self.deliver = deliver
        self._frame = None
        self._count = 0
        self._mixed = False
        self.frames = 0
        self.corrupted = 0
        self.cells = 0

    def on_cell(self, cell: Cell) -> None:
        self.cells += 1
        frame = cell.frame
        if self._count == 0:
            self._frame = frame
        elif frame is not self._frame:
            self._mixed = True
        self._count += 1
        if cell.eom:
            if not self._mixed and self._count == segment_to_cells(frame.length):
                self.frames += 1
                self.deliver(frame)
            else:
                self.corrupted += 1
            self._count = 0
            self._mixed = False
            self._frame = None


def _send_frame(port: OutputPort, vc, seg: Segment) -> None:
    n = segment_to_cells(seg.length)
    for k in range(n):
        port.enqueue(Cell(vc, DATA, frame=seg, eom=k == n - 1))


class Switch:
    """Per-VC routing in both directions, with optional ERICA per output port."""

    def __init__(self, sim: Simulator, name: str):
        self.sim = sim
        self.name = name
        self.fwd_port: dict = {}
        self.rev_port: dict = {}
        self.erica: dict = {}  # vc -> EricaPort of that VC's forward output

    def forward(self, cell: Cell) -> None:
        vc = cell.vc
        erica = self.erica.get(vc)
        if erica is not None:
            erica.on_cell_arrival(cell, self.sim.now)
        self.fwd_port[vc].enqueue(cell)

    def forwarder(self, vc):
        """Specialised ``forward`` for one VC, used as a link sink."""
        enqueue = self.fwd_port[vc].enqueue
        erica = self.erica.get(vc)
        if erica is None:
            return enqueue
        arrival = erica.on_cell_arrival
        sim = self.sim

        def forward(cell: Cell) -> None:
            arrival(cell, sim.now)
            enqueue(cell)

        return forward

    def reverse(self, cell: Cell) -> None:
        vc = cell.vc
        if cell.kind is BACKWARD_RM:
            erica = self.erica.get(vc)
            if erica is not None:
                erica.stamp_backward_rm(cell)
        self.rev_port[vc].enqueue(cell)


class SourceHost:
    def __init__(self, sim: Simulator, vc, cfg: ScenarioConfig):
        self.vc = vc
        self.abr = AbrSource(sim, vc, pcr=cfg.pcr, icr=cfg.icr, acr_floor=cfg.acr_floor)
        self.tcp = TcpSender(
            sim,
            transmit=self._transmit,
            mss=cfg.mss,
            max_window=cfg.max_window,
            backlogged=self._rate_limited,
            name=f"tcp{vc}",
        )
        self.acks = Reassembler(lambda seg: self.tcp.on_ack(seg.ack_no, seg.window))

    def _rate_limited(self) -> bool:
        # a backlog at PCR is the source's own burst, not network feedback
        abr = self.abr
        return abr.backlogged and abr.acr < abr.pcr

    def _transmit(self, seg: Segment) -> None:
        self.abr.submit(seg, segment_to_cells(seg.length))

    def receive(self, cell: Cell) -> None:
        if cell.kind is BACKWARD_RM:
            self.abr.on_backward_rm(cell)
        else:
            self.acks.on_cell(cell)


class DestHost:
    def __init__(self, vc, cfg: ScenarioConfig):
        self.vc = vc
        self.reverse_port: OutputPort | None = None
        self.abr = AbrDestination(vc, reply=self._reply)
        self.tcp = TcpReceiver(self._send_ack, adv_window=cfg.max_window)
        self.data = Reassembler(self.tcp.on_segment)

    def _reply(self, brm: Cell) -> None:
        self.reverse_port.enqueue(brm)

    def _send_ack(self, ack: Segment) -> None:
        _send_frame(self.reverse_port, self.vc, ack)

    def receive(self, cell: Cell) -> None:
        if cell.kind is FORWARD_RM:
            self.abr.on_forward_rm(cell)
        else:
            self.data.on_cell(cell)


@dataclass
class Network:
    sim: Simulator
    cfg: ScenarioConfig
    sources: list[SourceHost]
    dests: list[DestHost]
    switches: list[Switch]
    bottleneck: OutputPort
    bottleneck_erica: EricaPort
    ports: dict[str, OutputPort] = field(default_factory=dict)
    ericas: dict[str, EricaPort] = field(default_factory=dict)

    def start(self) -> None:
        for src in self.sources:
            src.tcp.start()

    @property
    def forward_ports(self) -> list[OutputPort]:
        return [p for name, p in self.ports.items() if name.startswith("fwd:")]


def build_n_source(cfg: ScenarioConfig, sim: Simulator | None = None) -> Network:
    sim = sim or Simulator()
    lengths = cfg.path_lengths()
    rate = cfg.link_rate_bps
    cap = cfg.buffer_cells
    s1, s2 = Switch(sim, "sw1"), Switch(sim, "sw2")
    ports: dict[str, OutputPort] = {}
    ericas: dict[str, EricaPort] = {}

    trunk = Link(rate, lengths.trunk)
    bottleneck = OutputPort(sim, trunk, sink=s2.forward, capacity=cap, name="fwd:sw1->sw2")
    trunk_rev = OutputPort(sim, trunk, sink=s1.reverse, capacity=cap, name="rev:sw2->sw1")
    ports[bottleneck.name] = bottleneck
    ports[trunk_rev.name] = trunk_rev
    bn_erica = EricaPort(cfg.erica, trunk.cell_rate, sim)
    bn_erica.depth_probe = bottleneck.queue_depth
    ericas["sw1->sw2"] = bn_erica

    sources, dests = [], []
    for i in range(cfg.n_sources):
        src = SourceHost(sim, i, cfg)
        dst = DestHost(i, cfg)
        access = Link(rate, lengths.access[i])
        egress = Link(rate, lengths.egress[i])

        acc_fwd = OutputPort(sim, access, sink=s1.forward, capacity=cap, name=f"fwd:src{i}->sw1")
        acc_rev = OutputPort(sim, access, sink=src.receive, capacity=cap, name=f"rev:sw1->src{i}")
        eg_fwd = OutputPort(sim, egress, sink=dst.receive, capacity=cap, name=f"fwd:sw2->dst{i}")
        eg_rev = OutputPort(sim, egress, sink=s2.reverse, capacity=cap, name=f"rev:dst{i}->sw2")
        for p in (acc_fwd, acc_rev, eg_fwd, eg_rev):
            ports[p.name] = p

        src.abr.emit = acc_fwd.enqueue
        dst.reverse_port = eg_rev

        s1.fwd_port[i] = bottleneck
        s1.rev_port[i] = acc_rev
        s1.erica[i] = bn_erica
        s2.fwd_port[i] = eg_fwd
        s2.rev_port[i] = trunk_rev
        eg_erica = EricaPort(cfg.erica, egress.cell_rate, sim)
        eg_erica.depth_probe = eg_fwd.queue_depth
        s2.erica[i] = eg_erica
        ericas[f"sw2->dst{i}"] = eg_erica

        sources.append(src)
        dests.append(dst)

    # per-VC fast paths; the shared trunk port keeps the generic sink
    for i in range(cfg.n_sources):
        ports[f"fwd:src{i}->sw1"].sink = s1.forwarder(i)

    return Network(sim, cfg, sources, dests, [s1, s2], bottleneck, bn_erica, ports, ericas)
