"""Scenario lists mirroring the four result tables."""

from __future__ import annotations

from abrsim.engine import ms
from abrsim.erica import EricaParams
from abrsim.experiments.config import ScenarioConfig

LONG_RTT_DURATION_MS = 7500
LONG_RTT_WARMUP_MS = 6000

TABLE_TITLES = {
    1: "Effect of number of sources",
    2: "Effect of round trip time",
    3: "Effect of switch parameter (averaging interval)",
    4: "Effect of feedback delay",
}


def km_for_rtt(rtt_ms: float) -> float:
    """Uniform hop length giving ``rtt_ms`` over the 3-hop path (6 hops of 5 us/km)."""
    return rtt_ms * 1000 / 30


def km_for_fbd(fbd_ms: float) -> float:
    """Access-hop length giving ``fbd_ms`` of switch-source-switch delay."""
    return fbd_ms * 100


def table1() -> list[ScenarioConfig]:
    return [ScenarioConfig(n_sources=n, link_km=1000, name=f"t1_n{n}") for n in (1, 2, 5, 10, 15)]


def table2() -> list[ScenarioConfig]:
    return [ScenarioConfig(n_sources=15, link_km=km, name=f"t2_{km:g}km") for km in (1000, 500, 200, 50)]


def table3() -> list[ScenarioConfig]:
    out = []
    for km in (50, 1):
        for cells in (500, 1000):
            erica = EricaParams(interval_time=ms(10), interval_cells=cells)
            out.append(ScenarioConfig(n_sources=15, link_km=km, erica=erica, name=f"t3_{km:g}km_10ms_{cells}"))
    return out


def table4() -> list[ScenarioConfig]:
    out = []
    for rtt in (15, 30, 550):
        for fbd in (0.01, 1, 10):
            cfg = ScenarioConfig(
                n_sources=15,
                link_km=km_for_rtt(rtt),
                fbd_km=km_for_fbd(fbd),
                name=f"t4_rtt{rtt:g}_fbd{fbd:g}",
            )
            if rtt == 550:
                # queues peak ~10 RTTs in; throughput is still ramping at the end
                cfg = cfg.replace(duration=ms(LONG_RTT_DURATION_MS), warmup=ms(LONG_RTT_WARMUP_MS))
            out.append(cfg)
    return out


TABLES = {1: table1, 2: table2, 3: table3, 4: table4}


def table_configs(table: int) -> list[ScenarioConfig]:
    try:
        return TABLES[int(table)]()
    except KeyError:
        raise ValueError(f"no preset table {table!r}; choose 1-4") from None
