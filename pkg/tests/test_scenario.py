import random

import pytest

from satabr.abr import Service
from satabr.config import ScenarioConfig
from satabr.engine import ms
from satabr.scenario import BOUNDED, UNBOUNDED, Scenario, boundedness_verdict, run_scenario

TINY = dict(scale=100, duration_rtts=6)


def test_rtt_in_cells_at_defaults():
    assert Scenario(ScenarioConfig(n_sources=1)).rtt_in_cells == 200_750


def test_one_way_delays_add_up_to_half_rtt():
    for fd in (0.01, 1, 10, 550):
        sc = Scenario(ScenarioConfig(n_sources=1, feedback_delay_ms=fd))
        assert 2 * (sc.access_delay + sc.sat_delay + sc.dest_delay) == pytest.approx(ms(550), abs=4)


def test_topology_has_one_vc_per_source():
    sc = Scenario(ScenarioConfig(n_sources=5))
    assert len(sc.sources) == len(sc.senders) == len(sc.dest_links) == 5
    assert {s.vc for s in sc.sources} == set(range(5))
    assert sc.vbr is None and sc.erica is not None


def test_ubr_has_no_switch_feedback():
    sc = Scenario(ScenarioConfig(n_sources=2, service=Service.UBR))
    assert sc.erica is None


def test_vbr_source_attached_when_enabled():
    sc = Scenario(ScenarioConfig(n_sources=2, vbr=True))
    assert sc.vbr is not None and sc.vbr.peak_rate == pytest.approx(292_000)


# ---- boundedness rule ---------------------------------------------------------

def ramp(n, rtt=10.0, step=1.0):
    return [(i * step, i) for i in range(1, n + 1)]


def test_verdict_monotone_ramp_is_unbounded():
    # queue idle for the first round trips, then growing steadily
    series = [(float(t), max(0, t - 30)) for t in range(1, 201)]
    assert boundedness_verdict(series, 10.0) == UNBOUNDED


def test_verdict_ramp_from_zero_sits_on_the_doubling_edge():
    # a pure linear ramp ends at exactly twice its midpoint level
    assert boundedness_verdict(ramp(200), 10.0) == BOUNDED


def test_verdict_oscillation_under_ceiling_is_bounded():
    series = [(float(t), 500 + (t % 7) * 50) for t in range(1, 201)]
    assert boundedness_verdict(series, 10.0) == BOUNDED


def test_verdict_needs_more_than_doubling():
    # growing at the end, but not past twice the midpoint level
    series = [(float(t), 1000) for t in range(1, 101)]
    series += [(float(t), 1000 + t) for t in range(101, 201)]
    assert boundedness_verdict(series, 10.0) == BOUNDED


def test_verdict_plateau_at_end_is_bounded():
    series = ramp(150) + [(float(t), 150) for t in range(151, 201)]
    assert boundedness_verdict(series, 10.0) == BOUNDED


def test_verdict_short_run_is_bounded():
    assert boundedness_verdict(ramp(20), 10.0) == BOUNDED
    assert boundedness_verdict([], 10.0) == BOUNDED


# ---- conservation ---------------------------------------------------------------

def audit(sc, instants):
    for t in instants:
        sc.sim.run_until(t)
        c = sc.conservation()
        assert c["injected"] == c["delivered"] + c["queued"] + c["in_flight"] + c["dropped"], (t, c)
    return c


def random_config(rng):
    return ScenarioConfig(
        n_sources=rng.randint(1, 8),
        feedback_delay_ms=rng.choice([0.01, 1.0, 10.0, 100.0, 550.0]),
        service=rng.choice([Service.ABR, Service.UBR]),
        scheme=rng.choice(["erica", "erica+"]),
        vbr=rng.random() < 0.5,
        buffer_capacity=rng.choice([None, None, 200]),
        **TINY,
    )


@pytest.mark.parametrize("seed", range(4))
def test_conservation_random_mini_topologies(seed):
    rng = random.Random(seed)
    cfg = random_config(rng)
    sc = Scenario(cfg)
    sc.start()
    instants = sorted(rng.randrange(1, sc.duration) for _ in range(15)) + [sc.duration]
    c = audit(sc, instants)
    assert c["injected"] > 0


def test_finite_buffer_drops_are_accounted():
    cfg = ScenarioConfig(n_sources=4, service=Service.UBR, buffer_capacity=50, **TINY)
    sc = Scenario(cfg)
    sc.start()
    c = audit(sc, [sc.duration // 2, sc.duration])
    assert c["dropped"] > 0


# ---- reports ------------------------------------------------------------------

def test_unbounded_buffer_has_no_drops():
    r = run_scenario(ScenarioConfig(n_sources=3, service=Service.UBR, **TINY))
    assert r.drops == 0 and r.timeouts == 0


def test_report_fields_consistent():
    r = run_scenario(ScenarioConfig(n_sources=2, **TINY))
    assert r.max_queue_rtt_fraction == pytest.approx(r.max_abr_queue_cells / r.rtt_in_cells)
    assert r.rtt_in_cells == 2008  # 5.5 ms of cell slots
    assert len(r.per_conn_goodput) == 2 and all(g > 0 for g in r.per_conn_goodput)
    assert r.max_total_queue_cells >= r.max_abr_queue_cells
    times = [row[0] for row in r.queue_series]
    assert times == sorted(set(times))


def test_same_config_same_report():
    cfg = ScenarioConfig(n_sources=3, vbr=True, **TINY)
    assert run_scenario(cfg).summary() == run_scenario(cfg).summary()


def test_utilization_near_target_without_vbr():
    cfg = ScenarioConfig(n_sources=5, feedback_delay_ms=0.01, scale=10, duration_rtts=20)
    r = run_scenario(cfg)
    assert r.bounded_verdict == BOUNDED
    assert abs(r.bottleneck_utilization - 0.9) <= 0.05
