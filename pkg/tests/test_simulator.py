import math

import numpy as np
import pytest

from cloudspn import simulator, zoo
from cloudspn.net import NetBuilder
from cloudspn.numerics import reliability_curve, steady_availability
from cloudspn.simulator import (LivelockError, SimEstimate, SimOptions, simulate_availability,
                                simulate_reliability)


def one_shot(mean):
    b = NetBuilder()
    b.place("On", 1)
    b.place("Off")
    b.exponential("Fail", mean, inputs=["On"], outputs=["Off"])
    return b.build()


def test_options_validation():
    with pytest.raises(ValueError):
        SimOptions(horizon=10, replications=0)
    with pytest.raises(ValueError):
        SimOptions(horizon=0)
    with pytest.raises(ValueError):
        SimOptions(horizon=10, warmup=10)


def test_estimate_interval():
    e = SimEstimate(0.5, 0.1, 10)
    assert e.interval == (0.4, 0.6)
    assert e.contains(0.45) and not e.contains(0.7)


def test_same_seed_is_bit_identical(baseline):
    opts = SimOptions(horizon=2e4, replications=40, seed=11)
    a = simulate_availability(baseline.net, baseline.metric, opts)
    b = simulate_availability(baseline.net, baseline.metric, opts)
    assert a == b


def test_result_independent_of_chunking(baseline):
    small = SimOptions(horizon=2e4, replications=30, seed=5, chunk_size=7)
    large = SimOptions(horizon=2e4, replications=30, seed=5, chunk_size=256)
    a = simulate_availability(baseline.net, baseline.metric, small)
    b = simulate_availability(baseline.net, baseline.metric, large)
    assert a.mean == pytest.approx(b.mean, rel=1e-15)
    assert a.ci95_halfwidth == pytest.approx(b.ci95_halfwidth, rel=1e-12)


def test_replication_streams_are_independent_of_batch():
    first = simulator.replication_rng(3, 4).random(5)
    again = simulator.replication_rng(3, 4).random(5)
    other = simulator.replication_rng(3, 5).random(5)
    assert np.array_equal(first, again) and not np.array_equal(first, other)


def test_different_seeds_differ(baseline):
    a = simulate_availability(baseline.net, baseline.metric, SimOptions(2e4, 20, seed=1))
    b = simulate_availability(baseline.net, baseline.metric, SimOptions(2e4, 20, seed=2))
    assert a.mean != b.mean


def test_onoff_brackets_closed_form():
    net, metric = zoo.build_onoff(1259.03, 0.77)
    est = simulate_availability(net, metric, SimOptions(horizon=1e6, replications=100, seed=42))
    assert est.contains(1259.03 / (1259.03 + 0.77))
    assert est.ci95_halfwidth >= 0


@pytest.mark.slow
def test_baseline_brackets_analytic(baseline):
    exact = steady_availability(baseline.net, baseline.metric)
    est = simulate_availability(baseline.net, baseline.metric,
                                SimOptions(horizon=1e5, replications=200, seed=42))
    assert est.contains(exact), (est, exact)


def test_no_repair_reliability_at_mean():
    est = simulate_reliability(one_shot(100.0), "P{#On=1}", 100.0,
                               SimOptions(horizon=1, replications=2000, seed=3))
    assert est.contains(math.exp(-1)), est


def test_baseline_reliability_at_500h(baseline):
    exact = reliability_curve(baseline.net, baseline.metric, 500, 500).at(500)
    est = simulate_reliability(baseline.net, baseline.metric, 500,
                               SimOptions(horizon=1, replications=2000, seed=9))
    assert est.contains(exact), (est, exact)


def test_metric_false_from_start_gives_zero(baseline):
    est = simulate_reliability(baseline.net, "P{#Host1_Off > 0}", 1e9,
                               SimOptions(horizon=1, replications=5, seed=0))
    assert est.mean == 0.0


def test_reliability_rejects_nonpositive_t(baseline):
    with pytest.raises(ValueError):
        simulate_reliability(baseline.net, baseline.metric, 0.0, SimOptions(horizon=1))


def test_zero_time_firings_do_not_advance_clock():
    # Failure passes through an intermediate place drained by an immediate
    # transition; if that firing cost time the up fraction would change.
    b = NetBuilder()
    b.place("On", 1)
    b.place("Tmp")
    b.place("Off")
    b.exponential("Fail", 1.0, inputs=["On"], outputs=["Tmp"])
    b.immediate("Drop", inputs=["Tmp"], outputs=["Off"])
    b.exponential("Repair", 1.0, inputs=["Off"], outputs=["On"])
    est = simulate_availability(b.build(), "P{#On=1}", SimOptions(horizon=1e4, replications=50,
                                                                   seed=1))
    assert est.contains(0.5)
    b = NetBuilder()
    b.place("On", 1)
    b.place("Tmp")
    b.place("Off")
    b.deterministic("Fail", 1.0, inputs=["On"], outputs=["Tmp"])
    b.immediate("Drop", inputs=["Tmp"], outputs=["Off"])
    b.deterministic("Repair", 3.0, inputs=["Off"], outputs=["On"])
    exact = simulate_availability(b.build(), "P{#On=1}", SimOptions(horizon=40, replications=3))
    assert exact.mean == pytest.approx(0.25, abs=1e-12)


def test_livelock_is_detected(monkeypatch):
    monkeypatch.setattr(simulator, "MAX_ZERO_TIME_FIRINGS", 500)
    b = NetBuilder()
    b.place("A", 1)
    b.place("B")
    b.immediate("AB", inputs=["A"], outputs=["B"])
    b.immediate("BA", inputs=["B"], outputs=["A"])
    with pytest.raises(LivelockError):
        simulate_availability(b.build(), "P{#A=1}", SimOptions(horizon=10, replications=2))


def test_weighted_immediate_choice():
    b = NetBuilder()
    b.place("Start", 1)
    b.place("A")
    b.place("B")
    b.immediate("ToA", weight=1.0, inputs=["Start"], outputs=["A"])
    b.immediate("ToB", weight=3.0, inputs=["Start"], outputs=["B"])
    est = simulate_availability(b.build(), "P{#B=1}", SimOptions(horizon=1, replications=4000,
                                                                  seed=2))
    assert est.contains(0.75)


def test_deterministic_activation_runs():
    net, metric = zoo.build_vm_redundancy(deterministic_activation=True)
    exp_net, _ = zoo.build_vm_redundancy()
    est = simulate_availability(net, metric, SimOptions(horizon=5e4, replications=60, seed=4))
    exact = steady_availability(exp_net, metric)
    # the two delay laws share a 30 s mean, far below every other time scale
    assert abs(est.mean - exact) < 5 * est.ci95_halfwidth + 1e-4


def test_warmup_excludes_initial_period():
    net, metric = zoo.build_onoff(1.0, 1.0)
    est = simulate_availability(net, metric, SimOptions(horizon=1e4, replications=40, seed=8,
                                                        warmup=5e3))
    assert est.contains(0.5)
