"""Run metrics and the zero-loss buffer predictor."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from abrsim.engine import PS_PER_SECOND
from abrsim.fabric import cell_rate
from abrsim.tcp import max_tcp_throughput


@dataclass(frozen=True)
class BoundCoefficients:
    a: float = 3.0
    b: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 0:
            raise ValueError("bound coefficients must be non-negative")


def predict_q_bound(
    rtt: int,
    fbd: int,
    avg: int,
    link_rate_bps: float,
    k: BoundCoefficients = BoundCoefficients(),
) -> int:
    """Buffer (cells) for zero loss: (a*RTT + b*interval + c*feedback) x bandwidth.

    Durations are in picoseconds.
    """
    if min(rtt, fbd, avg) < 0:
        raise ValueError("durations must be non-negative")
    span = k.a * rtt + k.b * avg + k.c * fbd
    # guard against float noise pushing an exact product over a whole cell
    cells = span * cell_rate(link_rate_bps) / PS_PER_SECOND
    return math.ceil(round(cells, 6))


def rm_adjusted_ceiling(mss: int, link_rate_bps: float, rm_fraction: float = 1 / 32) -> float:
    """TCP ceiling after giving up ``rm_fraction`` of cells to RM cells."""
    return max_tcp_throughput(mss, link_rate_bps) * (1 - rm_fraction)


@dataclass
class RunMetrics:
    scenario: str
    n: int
    rtt_ms: float
    fbd_ms: float
    interval_ms: float
    interval_cells: int
    max_queue_cells: int
    max_queue_rtt_multiple: float
    per_source_mbps: list[float]
    total_mbps: float
    efficiency: float
    drops: int
    timeout_flag: bool
    timeouts: int = 0
    steady_state: bool = True
    max_queue_at_ms: float = 0.0
    max_queue_by_port: dict[str, int] = field(default_factory=dict)
    ceiling_mbps: float = 0.0
    rm_adjusted_ceiling_mbps: float = 0.0
    bottleneck_utilization: float = 0.0
    rate_limited_at_ms: list[float | None] = field(default_factory=list)
    bytes_delivered: list[int] = field(default_factory=list)
    max_flight: list[int] = field(default_factory=list)
    segments_sent: list[int] = field(default_factory=list)
    corrupted_frames: int = 0
    events: int = 0


def check_bound(metrics: RunMetrics, bound: int) -> bool:
    """Pass iff the observed maximum queue does not exceed ``bound``."""
    return metrics.max_queue_cells <= bound
