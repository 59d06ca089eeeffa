"""Running scenarios, preset tables and parameter sweeps."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from abrsim.engine import PS_PER_MS, PS_PER_SECOND, Simulator
from abrsim.experiments.config import ScenarioConfig, config_from_dict
from abrsim.experiments.metrics import (
    BoundCoefficients,
    RunMetrics,
    predict_q_bound,
    rm_adjusted_ceiling,
)
from abrsim.experiments.topology import Network, build_n_source
from abrsim.tcp import max_tcp_throughput

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "scenario,n,rtt_ms,fbd_ms,interval_ms,interval_cells,max_q_cells,max_q_rtt_mult,"
    "throughput_mbps,efficiency_pct,drops,timeouts,steady_state"
).split(",")

# relative throughput change between the two halves of the window
STEADY_TOLERANCE = 0.05


@dataclass
class RunResult:
    metrics: RunMetrics
    network: Network
    queue_trace: list[tuple[int, int]] | None = None
    erica_trace: list[tuple] | None = None
    trace: list | None = None
    samples: dict = field(default_factory=dict)


def bound_for(cfg: ScenarioConfig, k: BoundCoefficients = BoundCoefficients()) -> int:
    """Zero-loss buffer for a scenario, using its largest RTT and feedback delay.

    The averaging-interval term uses the interval's time limit, i.e. the
    longest an interval can last.
    """
    return predict_q_bound(cfg.rtt, cfg.fbd, cfg.erica.interval_time, cfg.link_rate_bps, k)


def _delivered(net: Network) -> list[int]:
    return [d.tcp.rcv_nxt for d in net.dests]


def simulate(
    cfg: ScenarioConfig,
    queue_trace: bool = False,
    erica_trace: bool = False,
    event_trace: bool = False,
    sample_every: int | None = None,
) -> RunResult:
    """Run one scenario to ``cfg.duration_ps`` and collect metrics.

    ``sample_every`` (ps) records per-source bytes sent and ACR at that
    period in ``RunResult.samples``.
    """
    sim = Simulator(trace=event_trace)
    net = build_n_source(cfg, sim)
    if queue_trace:
        net.bottleneck.enable_trace()
    if erica_trace:
        net.bottleneck_erica.trace = []

    duration = cfg.duration_ps
    warmup = cfg.warmup_ps
    middle = warmup + (duration - warmup) // 2
    marks: dict[str, tuple[list[int], int]] = {}

    def mark(label: str) -> None:
        marks[label] = (_delivered(net), net.bottleneck.accepted)

    sim.schedule(warmup, mark, "warmup")
    sim.schedule(middle, mark, "middle")

    samples: dict = {"t": [], "bytes_sent": [], "acr": []}
    if sample_every:
        def sample() -> None:
            samples["t"].append(sim.now)
            samples["bytes_sent"].append([s.tcp.bytes_sent for s in net.sources])
            samples["acr"].append([s.abr.acr for s in net.sources])
            if sim.now + sample_every <= duration:
                sim.schedule(sim.now + sample_every, sample)

        sample()

    net.start()
    stats = sim.run_until(duration)
    mark("end")

    metrics = _metrics(cfg, net, marks, duration, warmup, middle)
    metrics.events = sim.executed
    log.info("%s: %d events, max queue %d", cfg.name or "scenario", stats.executed, metrics.max_queue_cells)
    return RunResult(
        metrics=metrics,
        network=net,
        queue_trace=net.bottleneck.trace,
        erica_trace=net.bottleneck_erica.trace,
        trace=sim.trace,
        samples=samples if sample_every else {},
    )


def _mbps(nbytes: int, span: int) -> float:
    return nbytes * 8 / (span / PS_PER_SECOND) / 1e6


def _metrics(cfg, net, marks, duration, warmup, middle) -> RunMetrics:
    start, acc0 = marks["warmup"]
    mid, _ = marks["middle"]
    end, acc1 = marks["end"]
    span = duration - warmup
    per_source = [_mbps(e - s, span) for s, e in zip(start, end)]
    total = sum(per_source)
    first = _mbps(sum(mid) - sum(start), middle - warmup)
    second = _mbps(sum(end) - sum(mid), duration - middle)
    steady = second > 0 and abs(second - first) <= STEADY_TOLERANCE * second
    ceiling = max_tcp_throughput(cfg.mss, cfg.link_rate_bps)
    bdp_cells = cfg.rtt / PS_PER_SECOND * cfg.cell_rate
    max_q = net.bottleneck.max_depth
    drops = sum(p.drops for p in net.ports.values())
    timeouts = sum(s.tcp.timeouts for s in net.sources)
    return RunMetrics(
        scenario=cfg.name,
        n=cfg.n_sources,
        rtt_ms=cfg.rtt / PS_PER_MS,
        fbd_ms=cfg.fbd / PS_PER_MS,
        interval_ms=cfg.erica.interval_time / PS_PER_MS,
        interval_cells=cfg.erica.interval_cells,
        max_queue_cells=max_q,
        max_queue_rtt_multiple=max_q / bdp_cells if bdp_cells else 0.0,
        per_source_mbps=per_source,
        total_mbps=total,
        efficiency=total / ceiling,
        drops=drops,
        timeout_flag=timeouts > 0,
        timeouts=timeouts,
        steady_state=steady,
        max_queue_at_ms=net.bottleneck.max_depth_at / PS_PER_MS,
        max_queue_by_port={name: p.max_depth for name, p in net.ports.items()},
        ceiling_mbps=ceiling,
        rm_adjusted_ceiling_mbps=rm_adjusted_ceiling(cfg.mss, cfg.link_rate_bps),
        bottleneck_utilization=(acc1 - acc0) / (span / PS_PER_SECOND * cfg.cell_rate),
        rate_limited_at_ms=[
            None if s.tcp.rate_limited_since is None else s.tcp.rate_limited_since / PS_PER_MS
            for s in net.sources
        ],
        bytes_delivered=end,
        max_flight=[s.tcp.max_flight for s in net.sources],
        segments_sent=[s.tcp.segments_sent for s in net.sources],
        corrupted_frames=sum(d.data.corrupted for d in net.dests) + sum(s.acks.corrupted for s in net.sources),
    )


def run_scenario(cfg: ScenarioConfig) -> RunMetrics:
    return simulate(cfg).metrics


# --- CSV ----------------------------------------------------------------------


def _fmt(x: float, digits: int) -> str:
    return f"{x:.{digits}f}"


def metrics_row(m: RunMetrics) -> dict[str, str]:
    return {
        "scenario": m.scenario,
        "n": str(m.n),
        "rtt_ms": f"{m.rtt_ms:g}",
        "fbd_ms": f"{m.fbd_ms:g}",
        "interval_ms": f"{m.interval_ms:g}",
        "interval_cells": str(m.interval_cells),
        "max_q_cells": str(m.max_queue_cells),
        "max_q_rtt_mult": _fmt(m.max_queue_rtt_multiple, 3),
        "throughput_mbps": _fmt(m.total_mbps, 2),
        "efficiency_pct": _fmt(100 * m.efficiency, 2),
        "drops": str(m.drops),
        "timeouts": str(m.timeouts),
        "steady_state": "1" if m.steady_state else "0",
    }


def metrics_csv(rows: Iterable[RunMetrics]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for m in rows:
        writer.writerow(metrics_row(m))
    return buf.getvalue()


def write_queue_trace(trace: Sequence[tuple[int, int]], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_ps", "depth_cells"])
        w.writerows(trace)


def write_erica_trace(trace: Sequence[tuple], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "z", "n_active", "fair_share", "queue_depth"])
        for t, z, n, fs, depth in trace:
            w.writerow([t, f"{z:.6f}", n, f"{fs:.3f}", depth])


# --- batches ------------------------------------------------------------------


def run_many(configs: Sequence[ScenarioConfig], workers: int = 1) -> list[RunMetrics]:
    """Run scenarios, optionally in worker processes; output follows input order."""
    if workers <= 1 or len(configs) <= 1:
        return [run_scenario(c) for c in configs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_scenario, configs))


def run_table(table: int, buffer_cells: int | str | None = None, workers: int = 1) -> str:
    """Run one of the preset tables and return its CSV.

    ``buffer_cells="bound"`` sizes every buffer with :func:`bound_for`.
    """
    from abrsim.experiments.presets import table_configs

    configs = table_configs(table)
    if buffer_cells == "bound":
        configs = [c.replace(buffer_cells=bound_for(c)) for c in configs]
    elif buffer_cells is not None:
        configs = [c.replace(buffer_cells=int(buffer_cells)) for c in configs]
    return metrics_csv(run_many(configs, workers))


def sweep_configs(base: ScenarioConfig, param: str, values: Sequence[str]) -> list[ScenarioConfig]:
    out = []
    for v in values:
        cfg = config_from_dict({param: v}, base)
        out.append(cfg.replace(name=f"{base.name or 'sweep'}:{param}={v}"))
    return out
