"""Builders for the Nextcloud-on-CloudStack availability models.

Five models are provided:

``onoff``
    single component alternating between ``On`` and ``Off``.
``baseline``
    three hosts, three CloudStack system VMs (SSVM, CPVM, VR) on Host2 and the
    Nextcloud VM on Host3. A host failure kills the VMs it carries; a VM can
    only be repaired once its host is back.
``host-red``
    baseline plus a cold-standby Host4 that takes over the Nextcloud VM when
    Host3 fails and hands it back when Host3 is repaired.
``vm-red``
    baseline plus a cold-standby Nextcloud VM on Host3.
``combined``
    both of the above; Host4 carries its own active and standby Nextcloud VM.

Standby units do not fail while waiting. Activation delays are exponential by
default (so the nets stay Markovian); ``deterministic_activation=True`` gives
fixed delays for use with the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Callable, NamedTuple

from .net import Net, NetBuilder, validate_net

__all__ = [
    "ParamSet",
    "Model",
    "build_onoff",
    "build_baseline",
    "build_host_redundancy",
    "build_vm_redundancy",
    "build_combined",
    "MODEL_NAMES",
    "build_model",
    "parameter_bindings",
    "model_params",
    "repair_transitions",
    "non_repairable",
]

BASELINE_METRIC = "P{(#VMNext_On > 0) AND (#VR_On > 0)}"
HOST_RED_METRIC = "P{(#VR_On>0) AND ((#VMNext_On>0) OR (#VMNext2_On>0))}"
VM_RED_METRIC = "P{(#VR_On>0) AND ((#VMNext_On>0) OR (#VMRed_On>0))}"
COMBINED_METRIC = ("P{(#VR_On>0) AND ((#VMNext_On>0) OR (#VMRed_On>0) OR "
                   "(#VMNext2_On>0) OR (#VMRed2_On>0))}")


@dataclass(frozen=True)
class ParamSet:
    """Mean times in hours."""

    mttfc: float = 578.64
    mttrc: float = 0.89
    mttfh: float = 1259.03
    mttrh: float = 0.77
    mttfvm: float = 619.56
    mttrvm: float = 0.84
    vm_activation: float = 30 / 3600
    host_activation: float = 150 / 3600

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ValueError(f"parameter {f.name} must be positive, got {value}")

    def with_overrides(self, **overrides) -> "ParamSet":
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise KeyError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class Model(NamedTuple):
    net: Net
    metric: str


def _finish(b: NetBuilder, metric: str) -> Model:
    net = b.build()
    report = validate_net(net)
    if not report.ok:  # pragma: no cover - builders are fixed
        raise AssertionError(str(report))
    return Model(net, metric)


def build_onoff(mttf: float, mttr: float) -> Model:
    if not (mttf > 0 and mttr > 0):
        raise ValueError("mttf and mttr must be positive")
    b = NetBuilder("onoff")
    b.place("On", 1)
    b.place("Off", 0)
    b.exponential("T0", mttf, inputs=["On"], outputs=["Off"])
    b.exponential("T1", mttr, inputs=["Off"], outputs=["On"])
    return _finish(b, "P{#On=1}")


def _component(b: NetBuilder, name: str, mttf: float, mttr: float, repair_guard=None):
    b.exponential(f"MTTF_{name}", mttf, inputs=[f"{name}_On"], outputs=[f"{name}_Off"])
    b.exponential(f"MTTR_{name}", mttr, inputs=[f"{name}_Off"], outputs=[f"{name}_On"],
                  guard=repair_guard)


def _kill(b: NetBuilder, tname: str, vm: str, guard: str):
    b.immediate(tname, inputs=[f"{vm}_On"], outputs=[f"{vm}_Off"], guard=guard)


def _activation(b: NetBuilder, name: str, mean: float, deterministic: bool, **kw):
    if deterministic:
        b.deterministic(name, mean, **kw)
    else:
        b.exponential(name, mean, **kw)


def _baseline(b: NetBuilder, p: ParamSet):
    for comp in ("Host1", "Host2", "Host3", "SSVM", "CPVM", "VR", "VMNext"):
        b.place(f"{comp}_On", 1)
        b.place(f"{comp}_Off", 0)
    _kill(b, "T0", "SSVM", "#Host2_On = 0")
    _kill(b, "T1", "CPVM", "#Host2_On = 0")
    _kill(b, "T2", "VR", "#Host2_On = 0")
    _kill(b, "T3", "VMNext", "#Host3_On = 0")
    _component(b, "Host1", p.mttfc, p.mttrc)
    _component(b, "Host2", p.mttfh, p.mttrh)
    _component(b, "Host3", p.mttfh, p.mttrh)
    for vm in ("SSVM", "CPVM", "VR"):
        _component(b, vm, p.mttfvm, p.mttrvm, repair_guard="#Host2_On > 0")
    _component(b, "VMNext", p.mttfvm, p.mttrvm, repair_guard="#Host3_On > 0")


def _standby_vm(b: NetBuilder, p: ParamSet, vm: str, primary: str, host: str, wait_tokens: int,
                kill_guard: str, deterministic: bool):
    """Cold-standby VM ``vm`` covering ``primary`` on ``host``.

    Activation needs the primary down and the host up. A repaired standby goes
    back to the pool; when the primary is back the running standby is returned
    to the pool as well (the two VMs are interchangeable, so this is the same
    as the repaired one joining the pool).
    """
    wait = f"Wait{vm}"
    b.place(wait, wait_tokens)
    b.place(f"{vm}_On", 0)
    b.place(f"{vm}_Off", 0)
    _activation(b, f"Active{vm}", p.vm_activation, deterministic, inputs=[wait], outputs=[f"{vm}_On"],
                guard=f"(#{primary}_On = 0) AND (#{host}_On > 0)")
    b.exponential(f"MTTF_{vm}", p.mttfvm, inputs=[f"{vm}_On"], outputs=[f"{vm}_Off"])
    b.exponential(f"MTTR_{vm}", p.mttrvm, inputs=[f"{vm}_Off"], outputs=[wait],
                  guard=f"#{host}_On > 0")
    _kill(b, f"Kill_{vm}", vm, kill_guard)
    b.immediate(f"Release_{vm}", inputs=[f"{vm}_On"], outputs=[wait], guard=f"#{primary}_On > 0")


def _standby_host(b: NetBuilder, p: ParamSet, deterministic: bool, with_vm_standby: bool):
    """Cold-standby Host4 with its own Nextcloud VM (VMNext2)."""
    b.place("WaitHostRed", 1)
    for comp in ("Host4", "VMNext2"):
        b.place(f"{comp}_On", 0)
        b.place(f"{comp}_Off", 0)
    outputs = ["Host4_On", "VMNext2_On"] + (["WaitVMRed2"] if with_vm_standby else [])
    _activation(b, "ActiveHostRed", p.host_activation, deterministic, inputs=["WaitHostRed"],
                outputs=outputs, guard="#Host3_On = 0")
    _component(b, "Host4", p.mttfh, p.mttrh)
    b.exponential("MTTF_VMNext2", p.mttfvm, inputs=["VMNext2_On"], outputs=["VMNext2_Off"])
    b.exponential("MTTR_VMNext2", p.mttrvm, inputs=["VMNext2_Off"], outputs=["VMNext2_On"],
                  guard="#Host4_On > 0")
    # Host4 failure kills its VMs; Host3 coming back shuts them down before failback.
    host4_stop = "(#Host4_On = 0) OR (#Host3_On > 0)"
    _kill(b, "T4", "VMNext2", host4_stop)
    if with_vm_standby:
        b.place("WaitVMRed2", 0)
        b.place("VMRed2_On", 0)
        b.place("VMRed2_Off", 0)
        _activation(b, "ActiveVMRed2", p.vm_activation, deterministic, inputs=["WaitVMRed2"],
                    outputs=["VMRed2_On"], guard="(#VMNext2_On = 0) AND (#Host4_On > 0)")
        b.exponential("MTTF_VMRed2", p.mttfvm, inputs=["VMRed2_On"], outputs=["VMRed2_Off"])
        b.exponential("MTTR_VMRed2", p.mttrvm, inputs=["VMRed2_Off"], outputs=["WaitVMRed2"],
                      guard="#Host4_On > 0")
        _kill(b, "Kill_VMRed2", "VMRed2", host4_stop)
        b.immediate("Release_VMRed2", inputs=["VMRed2_On"], outputs=["WaitVMRed2"],
                    guard="(#VMNext2_On > 0) AND (#Host3_On = 0)")
        b.immediate("FailbackHost", inputs=["Host4_On", "VMNext2_Off", "WaitVMRed2"],
                    outputs=["WaitHostRed"], guard="#Host3_On > 0")
        b.immediate("FailbackHost_b", inputs=["Host4_On", "VMNext2_Off", "VMRed2_Off"],
                    outputs=["WaitHostRed"], guard="#Host3_On > 0")
    else:
        b.immediate("FailbackHost", inputs=["Host4_On", "VMNext2_Off"], outputs=["WaitHostRed"],
                    guard="#Host3_On > 0")


def build_baseline(p: ParamSet = ParamSet()) -> Model:
    b = NetBuilder("baseline")
    _baseline(b, p)
    return _finish(b, BASELINE_METRIC)


def build_host_redundancy(p: ParamSet = ParamSet(), deterministic_activation: bool = False) -> Model:
    b = NetBuilder("host-red")
    _baseline(b, p)
    _standby_host(b, p, deterministic_activation, with_vm_standby=False)
    return _finish(b, HOST_RED_METRIC)


def build_vm_redundancy(p: ParamSet = ParamSet(), deterministic_activation: bool = False) -> Model:
    b = NetBuilder("vm-red")
    _baseline(b, p)
    _standby_vm(b, p, "VMRed", "VMNext", "Host3", 1, "#Host3_On = 0", deterministic_activation)
    return _finish(b, VM_RED_METRIC)


def build_combined(p: ParamSet = ParamSet(), deterministic_activation: bool = False) -> Model:
    b = NetBuilder("combined")
    _baseline(b, p)
    _standby_vm(b, p, "VMRed", "VMNext", "Host3", 1, "#Host3_On = 0", deterministic_activation)
    _standby_host(b, p, deterministic_activation, with_vm_standby=True)
    return _finish(b, COMBINED_METRIC)


_BUILDERS: dict[str, Callable[..., Model]] = {
    "baseline": build_baseline,
    "host-red": build_host_redundancy,
    "vm-red": build_vm_redundancy,
    "combined": build_combined,
}

MODEL_NAMES = ("onoff", "baseline", "host-red", "vm-red", "combined")
REDUNDANCY_MODELS = MODEL_NAMES[1:]

ONOFF_DEFAULTS = {"mttf": ParamSet.mttfh, "mttr": ParamSet.mttrh}


def build_model(name: str, overrides: dict | None = None, deterministic_activation: bool = False) -> Model:
    """Build a bundled model by name with optional parameter overrides.

    ``onoff`` accepts ``mttf`` and ``mttr``; the others accept any
    :class:`ParamSet` field.
    """
    overrides = dict(overrides or {})
    if name == "onoff":
        unknown = set(overrides) - set(ONOFF_DEFAULTS)
        if unknown:
            raise KeyError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        params = {**ONOFF_DEFAULTS, **{k: float(v) for k, v in overrides.items()}}
        return build_onoff(params["mttf"], params["mttr"])
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}") from None
    p = ParamSet().with_overrides(**overrides)
    if name == "baseline":
        return builder(p)
    return builder(p, deterministic_activation=deterministic_activation)


def parameter_bindings(net: Net) -> dict:
    """Transition name -> name of the parameter that sets its mean."""
    out = {}
    for t in net.transitions:
        name = t.name
        if net.name == "onoff":
            ref = {"T0": "mttf", "T1": "mttr"}.get(name)
        elif name.startswith(("MTTF_", "MTTR_")):
            prefix, comp = name[:4].lower(), name[5:]
            suffix = "c" if comp == "Host1" else "h" if comp.startswith("Host") else "vm"
            ref = prefix + suffix
        elif name == "ActiveHostRed":
            ref = "host_activation"
        elif name.startswith("ActiveVMRed"):
            ref = "vm_activation"
        else:
            ref = None
        if ref:
            out[name] = ref
    return out


def model_params(name: str, overrides: dict | None = None) -> dict:
    """Effective parameter values of a bundled model."""
    overrides = {k: float(v) for k, v in (overrides or {}).items()}
    if name == "onoff":
        return {**ONOFF_DEFAULTS, **overrides}
    return ParamSet().with_overrides(**overrides).as_dict()


def repair_transitions(net: Net) -> list[str]:
    return [t.name for t in net.transitions if t.name.startswith("MTTR_")]


def non_repairable(net: Net) -> Net:
    """Copy of ``net`` without repair transitions (failover still works)."""
    return net.without_transitions(repair_transitions(net))
