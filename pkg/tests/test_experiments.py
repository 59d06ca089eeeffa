import pytest

from abrsim.engine import PS_PER_MS, ms
from abrsim.erica import EricaParams
from abrsim.experiments import (
    BoundCoefficients,
    ScenarioConfig,
    build_n_source,
    check_bound,
    config_from_dict,
    load_config,
    parse_config_text,
    predict_q_bound,
    simulate,
    table_configs,
)
from abrsim.experiments.config import dump_config
from abrsim.experiments.metrics import rm_adjusted_ceiling
from abrsim.experiments.runner import CSV_COLUMNS, bound_for, metrics_csv
from abrsim.fabric import DATA, OC3_BPS, OutputPort

RATE = OC3_BPS


@pytest.mark.parametrize("km,rtt,fbd", [(1000, 30, 10), (500, 15, 5), (200, 6, 2), (50, 1.5, 0.5)])
def test_uniform_lengths_give_table_delays(km, rtt, fbd):
    cfg = ScenarioConfig(n_sources=15, link_km=km)
    assert cfg.rtt == ms(rtt) and cfg.fbd == ms(fbd)
    net = build_n_source(cfg)
    one_way = net.ports["fwd:src0->sw1"].link.prop_delay + net.bottleneck.link.prop_delay
    one_way += net.ports["fwd:sw2->dst0"].link.prop_delay
    assert 2 * one_way == ms(rtt)


def test_heterogeneous_lengths():
    cfg = ScenarioConfig(n_sources=2, link_km_list=(1000, 50))
    assert cfg.rtts == (ms(30), ms(1.5))
    assert cfg.fbds == (ms(10), ms(0.5))
    lengths = cfg.path_lengths()
    for km, a, e in zip(cfg.source_km, lengths.access, lengths.egress):
        assert a + lengths.trunk + e == pytest.approx(3 * km)


@pytest.mark.parametrize("rtt,fbd", [(15, 0.01), (30, 1), (550, 10)])
def test_asymmetric_loop(rtt, fbd):
    cfg = next(c for c in table_configs(4) if c.name == f"t4_rtt{rtt:g}_fbd{fbd:g}")
    assert cfg.rtt == ms(rtt)
    assert cfg.fbd == ms(fbd)


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(n_sources=0)
    with pytest.raises(ValueError):
        ScenarioConfig(link_km=0)
    with pytest.raises(ValueError):
        ScenarioConfig(n_sources=2, link_km_list=(10.0,))
    with pytest.raises(ValueError):
        ScenarioConfig(duration=ms(10), warmup=ms(10))


def test_config_file_roundtrip(tmp_path):
    text = """
    # Table 4 style asymmetric loop
    n_sources = 15
    link_km = 500
    fbd_km = 1
    interval_ms = 10
    interval_cells = 500
    buffer_cells = 4000
    duration_ms = 50
    warmup_ms = 20
    """
    path = tmp_path / "t4.conf"
    path.write_text(text)
    cfg = load_config(path)
    assert cfg.name == "t4"
    assert cfg.fbd == ms(0.01) and cfg.rtt == ms(15)
    assert cfg.erica == EricaParams(interval_time=ms(10), interval_cells=500)
    assert cfg.buffer_cells == 4000
    again = config_from_dict(parse_config_text(dump_config(cfg)))
    assert again == cfg


def test_config_parsing_variants():
    cfg = config_from_dict(parse_config_text("link_km_list = 1000, 50\nunbounded\nlink_rate_mbps = 155.52"))
    assert cfg.n_sources == 2 and cfg.buffer_cells is None and cfg.link_rate_bps == pytest.approx(RATE)
    with pytest.raises(ValueError):
        parse_config_text("bogus = 1")
    with pytest.raises(ValueError):
        parse_config_text("no equals sign here")


def test_predict_q_bound_examples():
    k = BoundCoefficients(3, 0, 0)
    assert predict_q_bound(ms(30), 0, 0, RATE, k) == 33_012
    assert predict_q_bound(ms(1.5), 0, 0, RATE, k) == 1_651
    assert predict_q_bound(0, 0, 0, RATE) == 0
    full = predict_q_bound(ms(30), ms(10), ms(1), RATE)
    assert full == 37_047  # 41 ms of line rate, rounded up
    with pytest.raises(ValueError):
        BoundCoefficients(-1, 0, 0)


def test_bound_for_uses_largest_delays():
    cfg = ScenarioConfig(n_sources=2, link_km_list=(1000, 50))
    assert bound_for(cfg) == predict_q_bound(ms(30), ms(10), ms(1), RATE)


def test_reference_rows_within_bound():
    # observed 15073 (30 ms) and 1596 (1.5 ms) against 3*RTT alone
    k = BoundCoefficients(3, 0, 0)
    assert 15_073 <= predict_q_bound(ms(30), 0, 0, RATE, k)
    assert 1_596 <= predict_q_bound(ms(1.5), 0, 0, RATE, k)


def test_rm_adjusted_ceiling():
    assert rm_adjusted_ceiling(512, RATE) == pytest.approx(125.2 * 31 / 32, abs=0.1)


SHORT = ScenarioConfig(n_sources=3, link_km=50, duration=ms(40), warmup=ms(20), name="short")


def test_check_bound_inclusive():
    m = simulate(SHORT).metrics
    assert check_bound(m, m.max_queue_cells)
    assert not check_bound(m, m.max_queue_cells - 1)


def test_csv_header_and_row():
    m = simulate(SHORT).metrics
    text = metrics_csv([m])
    header, row = text.strip().split("\n")
    assert header == (
        "scenario,n,rtt_ms,fbd_ms,interval_ms,interval_cells,max_q_cells,max_q_rtt_mult,"
        "throughput_mbps,efficiency_pct,drops,timeouts,steady_state"
    )
    assert header.split(",") == CSV_COLUMNS
    assert row.startswith("short,3,1.5,0.5,1,100,")


def test_event_trace_deterministic():
    a = simulate(SHORT.replace(duration=ms(8), warmup=ms(4)), event_trace=True).trace
    b = simulate(SHORT.replace(duration=ms(8), warmup=ms(4)), event_trace=True).trace
    assert len(a) > 1_000 and a == b


def test_unbounded_run_never_drops():
    m = simulate(SHORT).metrics
    assert m.drops == 0 and not m.timeout_flag and m.corrupted_frames == 0
    assert 0 < m.efficiency <= 1


def _cells_in_flight(sim, vc):
    n = 0
    for entry in sim.pending_events():
        args = entry[3]
        if args and getattr(args[0], "kind", None) is DATA and args[0].vc == vc and args[0].frame.length:
            n += 1
    return n


def test_cell_conservation_per_vc(monkeypatch):
    dropped = {}
    enqueue = OutputPort.enqueue

    def counting(self, cell):
        ok = enqueue(self, cell)
        if not ok and cell.kind is DATA and cell.frame.length and self.name.startswith("fwd:"):
            dropped[cell.vc] = dropped.get(cell.vc, 0) + 1
        return ok

    monkeypatch.setattr(OutputPort, "enqueue", counting)
    net = simulate(SHORT.replace(buffer_cells=40, duration=ms(30), warmup=ms(10))).network
    assert sum(dropped.values()) > 0
    for src, dst in zip(net.sources, net.dests):
        vc = src.vc
        injected = src.abr.data_cells_sent
        delivered = dst.data.cells
        assert injected == delivered + dropped.get(vc, 0) + _cells_in_flight(net.sim, vc)


def test_forced_drops_trigger_timeouts():
    # the first lost segment waits out the 3 s initial RTO
    cfg = ScenarioConfig(n_sources=3, link_km=50, buffer_cells=10, duration=ms(3400), warmup=ms(100))
    res = simulate(cfg)
    m = res.metrics
    assert m.drops > 0
    assert m.timeout_flag and m.timeouts > 0
    assert sum(s.tcp.retransmits for s in res.network.sources) > 0
    assert m.max_queue_cells <= 10


def test_sequence_conservation():
    net = simulate(SHORT).network
    for src, dst in zip(net.sources, net.dests):
        tcp, rx = src.tcp, dst.tcp
        assert tcp.snd_una <= rx.rcv_nxt <= tcp.snd_max
        assert rx.out_of_order == 0 and rx.duplicates == 0
        assert tcp.max_flight <= tcp.max_window


def test_erica_converges_to_fair_share():
    cfg = ScenarioConfig(n_sources=5, link_km=50, duration=ms(120), warmup=ms(60))
    res = simulate(cfg, erica_trace=True, sample_every=ms(1))
    fair = 0.9 * cfg.cell_rate / cfg.n_sources
    last_acr = res.samples["acr"][-1]
    for acr in last_acr:
        assert abs(acr - fair) <= 0.1 * fair
    tail = [z for t, z, n, fs, q in res.erica_trace if t > ms(100)]
    assert sum(tail) / len(tail) == pytest.approx(1.0, abs=0.1)
    assert res.metrics.bottleneck_utilization <= 0.9 + 0.05


def test_rm_overhead_fraction():
    net = simulate(SHORT).network
    for src in net.sources:
        in_rate = src.abr.data_cells_sent + src.abr.rm_cells_sent
        assert abs(src.abr.rm_cells_sent - in_rate / 32) <= 1


def test_acr_never_above_latest_er():
    net = simulate(SHORT).network
    for src in net.sources:
        assert src.abr.brm_received > 0
        assert src.abr.acr <= max(src.abr.last_er, src.abr.acr_floor)
