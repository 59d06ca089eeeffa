import pytest

from abrsim.engine import PS_PER_SECOND, Simulator, ms, us
from abrsim.erica import EricaParams, EricaPort, averaging_interval_length, interval_boundary
from abrsim.fabric import BACKWARD_RM, DATA, FORWARD_RM, OC3_BPS, Cell, cell_rate

LINK = cell_rate(OC3_BPS)
CAP = 0.9 * LINK


def test_defaults():
    p = EricaParams()
    assert p.target_utilization == 0.9
    assert p.interval_time == ms(1) and p.interval_cells == 100


@pytest.mark.parametrize(
    "cells,elapsed,expected",
    [(99, us(990), False), (100, us(400), True), (10, ms(1), True), (0, 0, False)],
)
def test_interval_boundary(cells, elapsed, expected):
    assert interval_boundary(0, cells, EricaParams(), elapsed) is expected


def test_interval_ends_by_count():
    sim = Simulator()
    port = EricaPort(EricaParams(), LINK, sim)
    step = us(4)  # 100 cells in 0.4 ms
    for k in range(1, 101):
        sim.run_until(k * step)
        port.on_cell_arrival(Cell(0), sim.now)
    assert port.intervals == 1
    assert port.start == us(400) and port.cells == 0
    assert port.input_rate == pytest.approx(100 / 400e-6)


def test_interval_ends_by_time():
    sim = Simulator()
    port = EricaPort(EricaParams(), LINK, sim)
    sim.run_until(ms(1) - 1)
    assert port.intervals == 0
    sim.run_until(ms(1))
    assert port.intervals == 1
    # empty interval keeps the initial allocation
    assert port.z == 1.0 and port.fair_share == pytest.approx(CAP)


def test_frm_records_ccr():
    port = EricaPort(EricaParams(), LINK)
    port.on_cell_arrival(Cell(7, FORWARD_RM, er=LINK, ccr=50_000.0), 10)
    assert port.last_ccr[7] == 50_000.0


def _end_with(port, rate, vcs, elapsed=ms(1)):
    port.start = 0
    port.cells = rate * elapsed / PS_PER_SECOND
    port.active_vcs = set(vcs)
    port.end_interval(elapsed)


def test_end_interval_overload():
    port = EricaPort(EricaParams(), LINK)
    _end_with(port, 400_000, {0, 1})
    assert port.abr_capacity == pytest.approx(330_113.2, abs=0.1)
    assert port.z == pytest.approx(1.2117, abs=1e-4)
    assert port.fair_share == pytest.approx(165_056.6, abs=0.1)


def test_end_interval_exact_load():
    port = EricaPort(EricaParams(), LINK)
    _end_with(port, CAP, {0})
    assert port.z == pytest.approx(1.0)
    assert port.fair_share == pytest.approx(CAP)


def test_empty_interval_retains_allocation():
    port = EricaPort(EricaParams(), LINK)
    _end_with(port, 400_000, {0, 1})
    z, fs, n = port.z, port.fair_share, port.n_active
    _end_with(port, 0, set())
    assert (port.z, port.fair_share, port.n_active) == (z, fs, n)


def test_z_floor():
    port = EricaPort(EricaParams(), LINK)
    _end_with(port, 1, {0})
    assert port.z == 0.01


def _brm(vc, er):
    return Cell(vc, BACKWARD_RM, er=er, ccr=0.0)


def test_stamp_uses_vc_share():
    port = EricaPort(EricaParams(), LINK)
    port.z, port.fair_share = 1.2117, 165_056.0
    port.last_ccr[0] = 300_000.0
    brm = port.stamp_backward_rm(_brm(0, LINK))
    assert brm.er == pytest.approx(247_585, rel=1e-4)


def test_stamp_fixed_point_and_min():
    port = EricaPort(EricaParams(), LINK)
    port.z, port.fair_share = 1.0, 100_000.0
    port.last_ccr[0] = 100_000.0
    assert port.stamp_backward_rm(_brm(0, LINK)).er == pytest.approx(100_000.0)
    port.fair_share = 200_000.0
    assert port.stamp_backward_rm(_brm(0, 100_000.0)).er == 100_000.0


def test_stamp_capped_at_link_rate_and_unknown_vc():
    port = EricaPort(EricaParams(), LINK)
    port.z = 0.01
    port.last_ccr[0] = LINK
    assert port.stamp_backward_rm(_brm(0, 10 * LINK)).er == LINK
    # no CCR seen: fair share only
    port.fair_share = 1234.0
    assert port.stamp_backward_rm(_brm(5, LINK)).er == 1234.0


def test_counts_all_abr_cells():
    port = EricaPort(EricaParams(interval_cells=1000), LINK)
    port.on_cell_arrival(Cell(0, DATA), 1)
    port.on_cell_arrival(Cell(1, FORWARD_RM, er=1.0, ccr=1.0), 2)
    assert port.cells == 2 and port.active_vcs == {0, 1}


def test_averaging_interval_length():
    assert averaging_interval_length(EricaParams(), LINK) == pytest.approx(272_634_000, rel=1e-5)
    p = EricaParams(interval_time=ms(10), interval_cells=500)
    assert averaging_interval_length(p, LINK) == pytest.approx(ms(1.36317), rel=1e-4)
    assert averaging_interval_length(EricaParams(interval_time=us(10)), LINK) == us(10)
