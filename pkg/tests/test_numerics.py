import math
import warnings

import numpy as np
import pytest
import scipy.linalg as la
import scipy.sparse as sp

from cloudspn import zoo
from cloudspn.net import NetBuilder
from cloudspn.numerics import (HOURS_PER_YEAR, ConvergenceError, ReducibleChainError,
                               SolverOptions, analyze, availability_report, probability,
                               propagator, reliability_curve, residual, sample_times,
                               steady_availability, steady_state, transient)
from cloudspn.statespace import Ctmc, Partition, build_ctmc

P = zoo.ParamSet()


def two_state(rate_fail, rate_repair):
    Q = sp.csr_matrix(np.array([[-rate_fail, rate_fail], [rate_repair, -rate_repair]]))
    return Ctmc(((1, 0), (0, 1)), Q, np.array([1.0, 0.0]))


def nullspace_pi(Q):
    ns = la.null_space(Q.T)
    assert ns.shape[1] == 1
    v = ns[:, 0]
    return v / v.sum()


def test_onoff_closed_form():
    ctmc = two_state(1 / 1259.03, 1 / 0.77)
    pi = steady_state(ctmc)
    assert pi[0] == pytest.approx(1259.03 / 1259.80, abs=1e-12)


def test_symmetric_two_state():
    assert steady_state(two_state(2.0, 2.0)) == pytest.approx([0.5, 0.5], abs=1e-15)


@pytest.mark.parametrize("name", zoo.MODEL_NAMES)
def test_steady_state_matches_nullspace(models, name):
    ctmc = build_ctmc(models[name].net)
    pi = steady_state(ctmc)
    ref = nullspace_pi(ctmc.Q.toarray())
    assert np.abs(pi - ref).max() <= 1e-10
    assert residual(ctmc, pi) <= 1e-12
    assert abs(pi.sum() - 1) <= 1e-12


@pytest.mark.parametrize("name", ["baseline", "vm-red"])
def test_iterative_path_agrees_with_direct(models, name):
    ctmc = build_ctmc(models[name].net)
    direct = steady_state(ctmc, SolverOptions(method="direct"))
    iterative = steady_state(ctmc, SolverOptions(method="iterative"))
    assert np.abs(direct - iterative).max() <= 1e-10


def test_iteration_budget_exhaustion_reports_residual(baseline):
    ctmc = build_ctmc(baseline.net)
    with pytest.raises(ConvergenceError) as info:
        steady_state(ctmc, SolverOptions(method="iterative", max_iterations=1))
    assert info.value.residual > 0


def test_reducible_chain_rejected():
    Q = sp.csr_matrix(np.array([[-1.0, 0.5, 0.5], [0, 0, 0], [0, 0, 0]]))
    with pytest.raises(ReducibleChainError):
        steady_state(Ctmc(((0,), (1,), (2,)), Q, np.array([1.0, 0, 0])))


def test_transient_states_get_zero_mass():
    Q = sp.csr_matrix(np.array([[-1.0, 1.0, 0], [0, -2.0, 2.0], [0, 3.0, -3.0]]))
    pi = steady_state(Ctmc(((0,), (1,), (2,)), Q, np.array([1.0, 0, 0])))
    assert pi == pytest.approx([0, 0.6, 0.4], abs=1e-14)


def test_probability_edge_cases():
    pi = np.array([1.0, 0.0])
    assert probability(pi, Partition(np.array([0]), np.array([1]))) == 1.0
    assert probability(pi, Partition(np.array([], dtype=int), np.array([0, 1]))) == 0.0


# ---------------------------------------------------------------------------
# availability report

def test_report_baseline_rounding():
    r = availability_report(0.9948)
    assert r.nines == pytest.approx(2.28, abs=0.01)
    assert r.downtime_hours_per_year == pytest.approx(45.6, abs=0.2)


def test_report_four_nines():
    r = availability_report(0.9999)
    assert r.nines == pytest.approx(4.0, abs=1e-9)
    assert r.downtime_hours_per_year == pytest.approx(0.876, abs=1e-9)


def test_report_perfect():
    r = availability_report(1.0)
    assert math.isinf(r.nines) and r.downtime_hours_per_year == 0.0


@pytest.mark.parametrize("a", [-0.1, 1.5, float("nan")])
def test_report_rejects_out_of_range(a):
    with pytest.raises(ValueError):
        availability_report(a)


def test_downtime_is_exact():
    a = 0.987654321
    assert availability_report(a).downtime_hours_per_year == (1 - a) * HOURS_PER_YEAR


# ---------------------------------------------------------------------------
# transient

def test_transient_at_zero_is_initial(baseline):
    ctmc = build_ctmc(baseline.net)
    assert np.array_equal(transient(ctmc, 0.0).distribution, ctmc.initial)


def test_transient_rejects_negative_time(baseline):
    with pytest.raises(ValueError):
        transient(build_ctmc(baseline.net), -1.0)


def test_transient_pure_death():
    M = 1259.03
    Q = sp.csr_matrix(np.array([[-1 / M, 1 / M], [0.0, 0.0]]))
    ctmc = Ctmc(((1, 0), (0, 1)), Q, np.array([1.0, 0.0]))
    for t in (1.0, 100.0, 1000.0, 5000.0):
        res = transient(ctmc, t)
        assert res.distribution[0] == pytest.approx(math.exp(-t / M), abs=1e-9)
        assert res.error_bound <= 1e-10


@pytest.mark.parametrize("t", [0.5, 10.0, 200.0, 3000.0])
def test_transient_matches_expm(models, t):
    ctmc = build_ctmc(models["vm-red"].net)
    ref = ctmc.initial @ la.expm(ctmc.Q.toarray() * t)
    got = transient(ctmc, t).distribution
    assert np.abs(got - ref).max() <= 1e-9


def test_propagator_matches_expm(baseline):
    ctmc = build_ctmc(baseline.net)
    M, err = propagator(ctmc, 50.0)
    assert np.abs(M - la.expm(ctmc.Q.toarray() * 50.0)).max() <= 1e-9
    assert err <= 1e-10


def test_long_horizon_converges_to_steady_state(baseline):
    ctmc = build_ctmc(baseline.net)
    t = 100 * P.mttfh
    got = transient(ctmc, t).distribution
    assert np.abs(got - steady_state(ctmc)).max() <= 1e-6


def test_two_state_transient_reaches_steady_state():
    ctmc = two_state(1 / 1259.03, 1 / 0.77)
    got = transient(ctmc, 1e5).distribution
    assert np.abs(got - steady_state(ctmc)).max() <= 1e-8


# ---------------------------------------------------------------------------
# reliability

def test_sample_times():
    assert sample_times(3000, 50).tolist() == [50.0 * i for i in range(61)]
    assert sample_times(10, 4).tolist() == [0.0, 4.0, 8.0, 10.0]
    for bad in ((0, 1), (10, 0), (10, 11)):
        with pytest.raises(ValueError):
            sample_times(*bad)


def test_no_repair_single_component():
    b = NetBuilder()
    b.place("On", 1)
    b.place("Off")
    b.exponential("Fail", 500.0, inputs=["On"], outputs=["Off"])
    curve = reliability_curve(b.build(), "P{#On=1}", 3000, 50)
    assert np.abs(curve.values - np.exp(-curve.times / 500.0)).max() <= 1e-9


def test_baseline_curve_strictly_decreasing(baseline):
    curve = reliability_curve(baseline.net, baseline.metric, 3000, 50)
    assert curve.values[0] == 1.0
    assert (np.diff(curve.values) < 0).all()


def test_first_passage_matches_expm_on_absorbed_chain(baseline):
    from cloudspn.metric import bind
    from cloudspn.statespace import classify_states
    ctmc = build_ctmc(baseline.net)
    part = classify_states(ctmc, bind(baseline.metric, baseline.net))
    absorbed = ctmc.absorbing(~part.mask).Q.toarray()
    curve = reliability_curve(baseline.net, baseline.metric, 1000, 250)
    for t, r in curve.samples:
        ref = (ctmc.initial @ la.expm(absorbed * t))[part.mask].sum()
        assert r == pytest.approx(ref, abs=1e-9)


def test_first_passage_closed_form(baseline):
    # From all-up the first failure of VR's host, VR itself, Host3 or VMNext takes
    # the system down, and nothing can be repaired before that.
    rate = 1 / P.mttfh + 1 / P.mttfh + 1 / P.mttfvm + 1 / P.mttfvm
    curve = reliability_curve(baseline.net, baseline.metric, 3000, 50)
    assert np.abs(curve.values - np.exp(-rate * curve.times)).max() <= 1e-9


def test_down_initial_state_warns_and_returns_zero(baseline):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        curve = reliability_curve(baseline.net, "P{#Host1_On = 0}", 100, 10)
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
    assert (curve.values == 0).all()


def test_iterative_reliability_path_agrees(models):
    net, metric = models["vm-red"]
    dense = reliability_curve(net, metric, 500, 50)
    sparse = reliability_curve(net, metric, 500, 50, SolverOptions(dense_limit=10))
    assert np.abs(dense.values - sparse.values).max() <= 1e-9


def test_csv_format(baseline):
    curve = reliability_curve(baseline.net, baseline.metric, 100, 50)
    lines = curve.to_csv().splitlines()
    assert lines[0] == "t_hours,reliability"
    assert len(lines) == 4
    assert lines[1] == "0,1"
    t, r = lines[2].split(",")
    assert float(t) == 50 and float(r) == pytest.approx(curve.at(50), rel=1e-11)


def test_analyze_report(baseline):
    r = analyze(baseline.net, baseline.metric)
    assert r.availability == steady_availability(baseline.net, baseline.metric)
    assert r.percent == pytest.approx(100 * r.availability)
