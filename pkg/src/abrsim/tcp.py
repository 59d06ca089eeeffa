"""TCP Reno-style sender/receiver over AAL5.

Only what a lossless long-lived transfer needs is modelled in detail: slow
start, congestion avoidance, a window of up to 1 MB (window scaling), one ACK
per segment and timeout retransmission (go-back-N) as a safety net.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable

from abrsim.engine import PS_PER_MS, PS_PER_SECOND, Simulator
from abrsim.errors import ProtocolError
from abrsim.fabric import CELL_BYTES, CELL_PAYLOAD_BYTES

TCP_HEADER = 20
IP_HEADER = 20
LLC_SNAP = 8
AAL5_TRAILER = 8
FRAME_OVERHEAD = TCP_HEADER + IP_HEADER + LLC_SNAP + AAL5_TRAILER

DEFAULT_MSS = 512
DEFAULT_MAX_WINDOW = 16 * 64 * 1024

TIMER_GRANULARITY = 100 * PS_PER_MS
MIN_RTO = 2 * TIMER_GRANULARITY
INITIAL_RTO = 3 * PS_PER_SECOND


def segment_to_cells(length: int) -> int:
    """Cells needed for a TCP segment with ``length`` payload bytes."""
    if length < 0:
        raise ValueError("segment length must be non-negative")
    return -(-(length + FRAME_OVERHEAD) // CELL_PAYLOAD_BYTES)


def max_tcp_throughput(mss: int, link_rate_bps: float) -> float:
    """Best-case TCP goodput in Mbps once headers and cell padding are paid."""
    if mss <= 0:
        raise ValueError("mss must be positive")
    return link_rate_bps * mss / (CELL_BYTES * segment_to_cells(mss)) / 1e6


@dataclass(frozen=True)
class Segment:
    seq: int
    length: int
    is_ack: bool = False
    ack_no: int = 0
    window: int = 0

    @property
    def end(self) -> int:
        return self.seq + self.length


class TcpSender:
    """Infinite-source sender.

    ``transmit(segment)`` hands a segment to the layer below. ``backlogged``
    (optional) reports whether the layer below is holding data back at a
    rate it was told to use; a send decision taken while it is counts as
    rate-limited operation.
    """

    def __init__(
        self,
        sim: Simulator,
        transmit: Callable[[Segment], None],
        mss: int = DEFAULT_MSS,
        max_window: int = DEFAULT_MAX_WINDOW,
        backlogged: Callable[[], bool] | None = None,
        name: str = "",
    ):
        if mss <= 0 or max_window < mss:
            raise ValueError("need 0 < mss <= max_window")
        self.sim = sim
        self.transmit = transmit
        self.backlogged = backlogged
        self.name = name
        self.mss = mss
        self.max_window = max_window
        self.cwnd = float(mss)
        self.ssthresh = float(max_window)
        self.peer_window = max_window
        self.snd_una = 0
        self.snd_nxt = 0
        self.snd_max = 0
        self.srtt: float | None = None
        self.rttvar = 0.0
        self.rto = INITIAL_RTO
        self.rto_timer = None
        self._rto_deadline = 0
        self._sent_at: deque[tuple[int, int]] = deque()  # (end_seq, send time)
        self._retransmitted_below = 0
        self.segments_sent = 0
        self.bytes_sent = 0
        self.retransmits = 0
        self.timeouts = 0
        self.max_flight = 0
        self.rate_limited_since: int | None = None

    @property
    def flight(self) -> int:
        return self.snd_nxt - self.snd_una

    @property
    def window(self) -> float:
        return min(self.cwnd, self.max_window, self.peer_window)

    def start(self) -> None:
        self._send_allowed()

    def _send_allowed(self) -> None:
        mss = self.mss
        limit = self.window
        if (
            self.rate_limited_since is None
            and self.backlogged is not None
            and self.snd_nxt - self.snd_una + mss <= limit
            and self.backlogged()
        ):
            self.rate_limited_since = self.sim.now
        while self.snd_nxt - self.snd_una + mss <= limit:
            seq = self.snd_nxt
            retransmission = seq < self.snd_max
            self.transmit(Segment(seq, mss))
            self.snd_nxt = seq + mss
            self.segments_sent += 1
            if retransmission:
                self.retransmits += 1
            else:
                self.snd_max = self.snd_nxt
                self.bytes_sent += mss
                self._sent_at.append((self.snd_nxt, self.sim.now))
            flight = self.snd_nxt - self.snd_una
            if flight > self.max_flight:
                self.max_flight = flight
            if self.rto_timer is None:
                self._restart_timer()

    def _restart_timer(self) -> None:
        self._rto_deadline = self.sim.now + self.rto
        if self.rto_timer is None:
            self.rto_timer = self.sim.schedule(self._rto_deadline, self._on_timer)

    def _on_timer(self) -> None:
        # deadline moves forward on every ACK; the event just chases it
        now = self.sim.now
        if now < self._rto_deadline:
            self.rto_timer = self.sim.schedule(self._rto_deadline, self._on_timer)
            return
        self.rto_timer = None
        if self.snd_una < self.snd_max:
            self.on_rto()

    def stop(self) -> None:
        if self.rto_timer is not None:
            self.sim.cancel(self.rto_timer)
            self.rto_timer = None

    def _rtt_sample(self, sample: int) -> None:
        # Jacobson/Karels estimator
        if self.srtt is None:
            self.srtt = float(sample)
            self.rttvar = sample / 2
        else:
            err = sample - self.srtt
            self.srtt += err / 8
            self.rttvar += (abs(err) - self.rttvar) / 4
        rto = self.srtt + 4 * self.rttvar
        rto = math.ceil(rto / TIMER_GRANULARITY) * TIMER_GRANULARITY
        self.rto = int(max(rto, 2 * self.srtt, MIN_RTO))

    def on_ack(self, ack_no: int, window: int | None = None) -> None:
        if ack_no > self.snd_max:
            raise ProtocolError(f"{self.name}: ACK {ack_no} beyond snd_max {self.snd_max}")
        if window is not None:
            self.peer_window = window
        if ack_no <= self.snd_una:
            return
        now = self.sim.now
        sent_at = self._sent_at
        sample = None
        while sent_at and sent_at[0][0] <= ack_no:
            end, t = sent_at.popleft()
            if end > self._retransmitted_below:
                sample = now - t
        if sample is not None:
            self._rtt_sample(sample)
        self.snd_una = ack_no
        if self.snd_nxt < ack_no:
            self.snd_nxt = ack_no
        mss = self.mss
        if self.cwnd < self.ssthresh:
            self.cwnd += mss
        else:
            self.cwnd += mss * mss / self.cwnd
        if self.cwnd > self.max_window:
            self.cwnd = float(self.max_window)
        if self.snd_una < self.snd_max:
            self._restart_timer()
        self._send_allowed()

    def on_rto(self) -> None:
        self.timeouts += 1
        flight = self.snd_max - self.snd_una
        self.ssthresh = float(max(flight // 2, 2 * self.mss))
        self.cwnd = float(self.mss)
        self.snd_nxt = self.snd_una
        self._retransmitted_below = self.snd_max
        self.rto = min(2 * self.rto, 64 * PS_PER_SECOND)
        self._send_allowed()


class TcpReceiver:
    """Cumulative-ACK receiver, one ACK per arriving data segment."""

    def __init__(self, send_ack: Callable[[Segment], None], adv_window: int = DEFAULT_MAX_WINDOW):
        self.send_ack = send_ack
        self.adv_window = adv_window
        self.rcv_nxt = 0
        self.segments_received = 0
        self.out_of_order = 0
        self.duplicates = 0

    def on_segment(self, seg: Segment) -> Segment:
        self.segments_received += 1
        if seg.seq == self.rcv_nxt:
            self.rcv_nxt += seg.length
        elif seg.seq < self.rcv_nxt:
            self.duplicates += 1
        else:
            self.out_of_order += 1
        ack = Segment(self.rcv_nxt, 0, is_ack=True, ack_no=self.rcv_nxt, window=self.adv_window)
        if self.send_ack is not None:
            self.send_ack(ack)
        return ack
