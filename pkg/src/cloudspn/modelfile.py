"""Textual model files.

Example::

    [params]
    mttf = 1259.03
    mttr = 0.77

    [places]
    On = 1
    Off = 0

    [transitions]
    T0: exponential mean=$mttf
    T1: exponential mean=$mttr
    Kick: immediate priority=1 weight=1 guard="#On = 0"

    [arcs]
    On -> T0
    T0 -> Off
    Off -> T1
    T1 -> On
    Off -o Kick *2

    [metrics]
    availability = P{#On=1}

Full-line comments start with ``#`` or ``;``.
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field

from .metric import MetricSyntaxError, format_metric, parse_metric
from .net import (Arc, Deterministic, Exponential, Immediate, Net, Place, Transition,
                  validate_net)

__all__ = ["ModelFileError", "ModelFile", "parse_model_file", "serialize_model", "load_model_file"]

SECTIONS = ("params", "places", "transitions", "arcs", "metrics")

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_SECTION_RE = re.compile(r"^\[\s*(\w+)\s*\]$")
_ASSIGN_RE = re.compile(rf"^({_NAME})\s*=\s*(.+)$")
_TRANS_RE = re.compile(rf"^({_NAME})\s*:\s*(.+)$")
_ARC_RE = re.compile(rf"^({_NAME})\s*(->|-o)\s*({_NAME})\s*(?:\*\s*(\S+))?$")


class ModelFileError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.column = column


@dataclass
class ModelFile:
    net: Net
    metrics: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    # transition name -> parameter name its mean/delay refers to
    bindings: dict = field(default_factory=dict)

    def metric(self, name: str | None = None) -> str:
        if not self.metrics:
            raise KeyError("model file defines no metrics")
        if name is None:
            return next(iter(self.metrics.values()))
        try:
            return self.metrics[name]
        except KeyError:
            raise KeyError(f"unknown metric {name!r}; available: {', '.join(self.metrics)}") from None


def _positive(text: str, lineno: int, col: int, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ModelFileError(f"invalid number {text!r} for {what}", lineno, col) from None
    if not value > 0:
        raise ModelFileError(f"{what} must be positive, got {text}", lineno, col)
    return value


def parse_model_file(text: str, overrides: dict | None = None, name: str = "") -> ModelFile:
    """Parse a model file. ``overrides`` replace entries of ``[params]``."""
    overrides = dict(overrides or {})
    section = None
    params: dict[str, float] = {}
    places: list[tuple] = []
    transitions: list[tuple] = []
    arcs: list[tuple] = []
    metrics: dict[str, str] = {}
    seen: dict[str, set] = {s: set() for s in SECTIONS}
    seen_sections: set = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        col = len(raw) - len(raw.lstrip()) + 1
        if not line or line[0] in "#;":
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).lower()
            if section not in SECTIONS:
                raise ModelFileError(f"unknown section [{section}]", lineno, col)
            if section in seen_sections:
                raise ModelFileError(f"duplicate section [{section}]", lineno, col)
            seen_sections.add(section)
            continue
        if section is None:
            raise ModelFileError("content before first section header", lineno, col)

        if section == "arcs":
            m = _ARC_RE.match(line)
            if not m:
                raise ModelFileError("expected 'Place -> Transition', 'Transition -> Place' "
                                     "or 'Place -o Transition'", lineno, col)
            mult = 1
            if m.group(4) is not None:
                try:
                    mult = int(m.group(4))
                except ValueError:
                    raise ModelFileError(f"invalid multiplicity {m.group(4)!r}", lineno,
                                         col + m.start(4)) from None
            arcs.append((m.group(1), m.group(2), m.group(3), mult, lineno, col))
            continue

        if section == "transitions":
            m = _TRANS_RE.match(line)
            if not m:
                raise ModelFileError("expected 'Name: kind key=value ...'", lineno, col)
            tname = m.group(1)
            if tname in seen["transitions"]:
                raise ModelFileError(f"duplicate transition {tname!r}", lineno, col)
            seen["transitions"].add(tname)
            try:
                fields_ = shlex.split(m.group(2))
            except ValueError as exc:
                raise ModelFileError(str(exc), lineno, col + m.start(2)) from None
            transitions.append((tname, fields_, lineno, col + m.start(2)))
            continue

        m = _ASSIGN_RE.match(line)
        if not m:
            raise ModelFileError("expected 'name = value'", lineno, col)
        key, value = m.group(1), m.group(2).strip()
        if key in seen[section]:
            raise ModelFileError(f"duplicate entry {key!r} in [{section}]", lineno, col)
        seen[section].add(key)
        vcol = col + m.start(2)
        if section == "params":
            params[key] = _positive(value, lineno, vcol, key)
        elif section == "places":
            try:
                tokens = int(value)
            except ValueError:
                raise ModelFileError(f"invalid token count {value!r}", lineno, vcol) from None
            places.append((key, tokens))
        else:
            try:
                parse_metric(value)
            except MetricSyntaxError as exc:
                raise ModelFileError(str(exc), lineno, vcol + exc.offset) from None
            metrics[key] = value

    unknown = set(overrides) - set(params)
    if unknown:
        raise ModelFileError(f"unknown parameter(s) in overrides: {', '.join(sorted(unknown))}")
    params.update({k: float(v) for k, v in overrides.items()})

    def resolve(text: str, lineno: int, col: int, what: str):
        if text.startswith("$"):
            ref = text[1:]
            if ref not in params:
                raise ModelFileError(f"unknown parameter ${ref}", lineno, col)
            return params[ref], ref
        return _positive(text, lineno, col, what), None

    place_ids = {n: i for i, (n, _) in enumerate(places)}
    trans_ids = {t[0]: i for i, t in enumerate(transitions)}
    place_objs = [Place(i, n, k) for i, (n, k) in enumerate(places)]
    trans_objs = []
    bindings = {}
    for tid, (tname, fields_, lineno, col) in enumerate(transitions):
        if not fields_:
            raise ModelFileError("missing transition kind", lineno, col)
        kind_name = fields_[0].lower()
        opts = {}
        for item in fields_[1:]:
            if "=" not in item:
                raise ModelFileError(f"expected key=value, got {item!r}", lineno, col)
            k, v = item.split("=", 1)
            opts[k.lower()] = v
        guard = None
        if "guard" in opts:
            try:
                guard = parse_metric(opts.pop("guard"))
            except MetricSyntaxError as exc:
                raise ModelFileError(f"guard: {exc}", lineno, col) from None
        if kind_name == "exponential":
            if set(opts) != {"mean"}:
                raise ModelFileError("exponential transitions take exactly 'mean='", lineno, col)
            mean, ref = resolve(opts["mean"], lineno, col, "mean")
            kind = Exponential(mean)
        elif kind_name == "deterministic":
            if set(opts) != {"delay"}:
                raise ModelFileError("deterministic transitions take exactly 'delay='", lineno, col)
            mean, ref = resolve(opts["delay"], lineno, col, "delay")
            kind = Deterministic(mean)
        elif kind_name == "immediate":
            extra = set(opts) - {"priority", "weight"}
            if extra:
                raise ModelFileError(f"unexpected option(s) {sorted(extra)}", lineno, col)
            try:
                kind = Immediate(int(opts.get("priority", 1)), float(opts.get("weight", 1.0)))
            except ValueError:
                raise ModelFileError("invalid priority or weight", lineno, col) from None
            ref = None
        else:
            raise ModelFileError(f"unknown transition kind {fields_[0]!r}", lineno, col)
        if ref is not None:
            bindings[tname] = ref
        trans_objs.append(Transition(tid, tname, kind, guard))

    arc_objs = []
    for src, op, dst, mult, lineno, col in arcs:
        if op == "-o":
            if src not in place_ids or dst not in trans_ids:
                raise ModelFileError("inhibitor arc must run from a place to a transition", lineno, col)
            arc_objs.append(Arc("inhibitor", place_ids[src], trans_ids[dst], mult))
        elif src in place_ids and dst in trans_ids:
            arc_objs.append(Arc("input", place_ids[src], trans_ids[dst], mult))
        elif src in trans_ids and dst in place_ids:
            arc_objs.append(Arc("output", place_ids[dst], trans_ids[src], mult))
        elif src in place_ids and dst in place_ids or src in trans_ids and dst in trans_ids:
            raise ModelFileError("arc must connect place and transition", lineno, col)
        else:
            missing = src if src not in place_ids and src not in trans_ids else dst
            raise ModelFileError(f"unknown place or transition {missing!r}", lineno, col)

    net = Net(place_objs, trans_objs, arc_objs, name)
    report = validate_net(net)
    if not report.ok:
        raise ModelFileError("invalid net:\n  " + "\n  ".join(report.diagnostics))
    return ModelFile(net, metrics, params, bindings)


def load_model_file(path, overrides: dict | None = None) -> ModelFile:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stem = str(path).replace("\\", "/").rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return parse_model_file(text, overrides, name=stem)


def _num(x: float) -> str:
    return repr(float(x))


def serialize_model(net: Net, metrics: dict | None = None, params: dict | None = None,
                    bindings: dict | None = None) -> str:
    """Canonical text for ``net``.

    Sections always appear in the order params, places, transitions, arcs,
    metrics; entries keep the net's declaration order so place and transition
    ids survive a round trip. A transition listed in ``bindings`` refers to its
    parameter by ``$name`` when the values agree exactly.
    """
    params = dict(params or {})
    bindings = dict(bindings or {})
    out = []
    if params:
        out.append("[params]")
        out.extend(f"{k} = {_num(v)}" for k, v in params.items())
        out.append("")
    out.append("[places]")
    out.extend(f"{p.name} = {p.initial_tokens}" for p in net.places)
    out.append("")
    out.append("[transitions]")
    for t in net.transitions:
        k = t.kind
        ref = bindings.get(t.name)
        if isinstance(k, Immediate):
            spec = f"immediate priority={k.priority} weight={_num(k.weight)}"
        else:
            key, value = ("mean", k.mean) if isinstance(k, Exponential) else ("delay", k.delay)
            kind_name = "exponential" if isinstance(k, Exponential) else "deterministic"
            shown = f"${ref}" if ref in params and params[ref] == value else _num(value)
            spec = f"{kind_name} {key}={shown}"
        if t.guard is not None:
            spec += f' guard="{format_metric(t.guard, wrap=False)}"'
        out.append(f"{t.name}: {spec}")
    out.append("")
    out.append("[arcs]")
    for a in net.arcs:
        p = net.places[a.place].name
        t = net.transitions[a.transition].name
        suffix = f" *{a.multiplicity}" if a.multiplicity != 1 else ""
        if a.kind == "input":
            out.append(f"{p} -> {t}{suffix}")
        elif a.kind == "output":
            out.append(f"{t} -> {p}{suffix}")
        else:
            out.append(f"{p} -o {t}{suffix}")
    if metrics:
        out.append("")
        out.append("[metrics]")
        out.extend(f"{k} = {v}" for k, v in metrics.items())
    return "\n".join(out) + "\n"
