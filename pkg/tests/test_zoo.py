import numpy as np
import pytest

from cloudspn import zoo
from cloudspn.metric import bind, place_names, parse_metric
from cloudspn.net import Exponential, Immediate, validate_net
from cloudspn.numerics import steady_availability
from cloudspn.statespace import explore

P = zoo.ParamSet()


def avail(name, **overrides):
    net, metric = zoo.build_model(name, overrides)
    return steady_availability(net, metric)


@pytest.fixture(scope="module")
def defaults():
    return {name: avail(name) for name in zoo.MODEL_NAMES}


def test_param_defaults():
    assert (P.mttfc, P.mttrc, P.mttfh, P.mttrh, P.mttfvm, P.mttrvm) == (
        578.64, 0.89, 1259.03, 0.77, 619.56, 0.84)
    assert P.vm_activation == pytest.approx(30 / 3600)
    assert P.host_activation == pytest.approx(150 / 3600)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_param_validation(bad):
    with pytest.raises(ValueError):
        zoo.ParamSet(mttfh=bad)
    with pytest.raises(KeyError):
        P.with_overrides(mttx=1.0)


def test_onoff_builder():
    net, metric = zoo.build_onoff(1259.03, 0.77)
    assert net.place_names == ["On", "Off"] and metric == "P{#On=1}"
    assert net.initial_marking == (1, 0)
    assert steady_availability(net, metric) == pytest.approx(0.9993888, abs=1e-7)
    assert steady_availability(*zoo.build_onoff(1, 1)) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        zoo.build_onoff(0, 1)


@pytest.mark.parametrize("name", zoo.MODEL_NAMES)
def test_builders_validate_and_bind(models, name):
    net, metric = models[name]
    assert validate_net(net).ok
    bind(metric, net)


def test_baseline_structure(baseline):
    net = baseline.net
    assert len(net.places) == 14
    assert all(net.place(n).initial_tokens == (1 if n.endswith("_On") else 0)
               for n in net.place_names)
    timed = [t for t in net.transitions if isinstance(t.kind, Exponential)]
    assert len(timed) == 14
    means = {t.name: t.kind.mean for t in timed}
    assert means["MTTF_Host1"] == P.mttfc and means["MTTR_Host1"] == P.mttrc
    for h in ("Host2", "Host3"):
        assert means[f"MTTF_{h}"] == P.mttfh and means[f"MTTR_{h}"] == P.mttrh
    for vm in ("SSVM", "CPVM", "VR", "VMNext"):
        assert means[f"MTTF_{vm}"] == P.mttfvm and means[f"MTTR_{vm}"] == P.mttrvm
    imm = {t.name: t for t in net.transitions if isinstance(t.kind, Immediate)}
    assert set(imm) == {"T0", "T1", "T2", "T3"}
    from cloudspn.net import guard_text
    assert {guard_text(imm[t]) for t in ("T0", "T1", "T2")} == {"#Host2_On = 0"}
    assert guard_text(imm["T3"]) == "#Host3_On = 0"
    assert guard_text(net.transition("MTTR_VR")) == "#Host2_On > 0"
    assert guard_text(net.transition("MTTR_VMNext")) == "#Host3_On > 0"


def test_combined_metric_is_balanced_four_way_or(models):
    expr = parse_metric(models["combined"].metric)
    assert set(place_names(expr)) == {"VR_On", "VMNext_On", "VMRed_On", "VMNext2_On", "VMRed2_On"}
    assert len(expr.operands[1].operands) == 4


def test_mixed_case_metric_binds(models):
    net = models["combined"].net
    bind("P{(#VR_On>0) AND((#VMNext_ON>0) OR (#VMRed_ON>0) OR (#VMNext2_ON>0) OR (#VMRed2_ON>0))}",
         net)


def test_host_redundancy_structure(models):
    net = models["host-red"].net
    assert net.place("WaitHostRed").initial_tokens == 1
    act = net.transition("ActiveHostRed")
    assert act.kind.mean == pytest.approx(150 / 3600)
    outs = {net.places[p].name for p, _ in net.outputs(act.id)}
    assert outs == {"Host4_On", "VMNext2_On"}


def test_vm_redundancy_structure(models):
    net = models["vm-red"].net
    assert net.place("WaitVMRed").initial_tokens == 1
    act = net.transition("ActiveVMRed")
    assert act.kind.mean == pytest.approx(30 / 3600)
    assert {net.places[p].name for p, _ in net.inputs(act.id)} == {"WaitVMRed"}
    assert {net.places[p].name for p, _ in net.outputs(act.id)} == {"VMRed_On"}
    repair = net.transition("MTTR_VMRed")
    assert {net.places[p].name for p, _ in net.outputs(repair.id)} == {"WaitVMRed"}


def test_standby_units_do_not_fail_while_waiting(models):
    net = models["combined"].net
    for t in net.transitions:
        if t.name.startswith("MTTF_"):
            assert not any(net.places[p].name.startswith("Wait") for p, _ in net.inputs(t.id))


def test_standby_pool_tokens_never_exceed_initial(models):
    net = models["combined"].net
    pools = [net.place_id(n) for n in ("WaitVMRed", "WaitVMRed2", "WaitHostRed")]
    initial = sum(net.initial_marking[p] for p in pools)
    assert all(sum(m[p] for p in pools) <= initial for m in explore(net).states)


def test_baseline_availability(defaults):
    assert defaults["baseline"] == pytest.approx(0.9948, abs=0.0003)


def test_single_redundancy_availability(defaults):
    assert defaults["host-red"] == pytest.approx(0.9957, abs=0.0015)
    assert defaults["vm-red"] == pytest.approx(0.9967, abs=0.0015)


def test_ordering(defaults):
    a = [defaults[n] for n in zoo.REDUNDANCY_MODELS]
    assert a == sorted(a) and len(set(a)) == 4


def test_instant_repair_limit():
    a = avail("baseline", mttrc=1e-9, mttrh=1e-9, mttrvm=1e-9)
    assert a == pytest.approx(1.0, abs=1e-6)


def test_disabled_host_redundancy_matches_baseline(defaults):
    assert avail("host-red", host_activation=1e9) == pytest.approx(defaults["baseline"], abs=5e-4)


def test_disabled_vm_redundancy_matches_baseline(defaults):
    assert avail("vm-red", vm_activation=1e9) == pytest.approx(defaults["baseline"], abs=5e-4)


@pytest.mark.parametrize("name", zoo.REDUNDANCY_MODELS)
@pytest.mark.parametrize("param", ["mttrc", "mttrh", "mttrvm"])
def test_faster_repair_never_hurts(name, param):
    base = getattr(P, param)
    values = [avail(name, **{param: base * f}) for f in (2.0, 1.0, 0.5)]
    assert values[0] <= values[1] + 1e-12 <= values[2] + 2e-12


def test_build_model_rejects_unknown():
    with pytest.raises(KeyError):
        zoo.build_model("nope")


def test_non_repairable_drops_repairs(baseline):
    net = zoo.non_repairable(baseline.net)
    assert not any(t.name.startswith("MTTR_") for t in net.transitions)
    assert len(net.transitions) == len(baseline.net.transitions) - len(
        zoo.repair_transitions(baseline.net))


def test_deterministic_activation_variant():
    net, _ = zoo.build_combined(deterministic_activation=True)
    kinds = {t.name: type(t.kind).__name__ for t in net.transitions if t.name.startswith("Active")}
    assert set(kinds.values()) == {"Deterministic"}
    assert np.isclose(net.transition("ActiveHostRed").kind.delay, 150 / 3600)
