"""GSPN data model and token-game semantics.

A :class:`Net` is immutable once built. Markings are plain tuples of token
counts indexed by place id, so they hash and compare by value.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .metric import Expr, UnknownPlaceError, bind, format_metric, parse_metric

__all__ = [
    "Exponential",
    "Deterministic",
    "Immediate",
    "Place",
    "Transition",
    "Arc",
    "Net",
    "NetBuilder",
    "Marking",
    "ValidationReport",
    "NotEnabledError",
    "validate_net",
    "enabled_transitions",
    "fire",
]

Marking = tuple


class NotEnabledError(RuntimeError):
    """Raised when firing a transition that is not enabled."""


@dataclass(frozen=True)
class Exponential:
    mean: float

    @property
    def rate(self) -> float:
        return 1.0 / self.mean


@dataclass(frozen=True)
class Deterministic:
    """Fixed firing delay. Only the simulator accepts it."""

    delay: float


@dataclass(frozen=True)
class Immediate:
    priority: int = 1
    weight: float = 1.0


Kind = Union[Exponential, Deterministic, Immediate]


@dataclass(frozen=True)
class Place:
    id: int
    name: str
    initial_tokens: int = 0


@dataclass(frozen=True)
class Transition:
    id: int
    name: str
    kind: Kind
    guard: Optional[Expr] = None

    @property
    def immediate(self) -> bool:
        return isinstance(self.kind, Immediate)

    @property
    def timed(self) -> bool:
        return not self.immediate


@dataclass(frozen=True)
class Arc:
    kind: str  # "input" | "output" | "inhibitor"
    place: int
    transition: int
    multiplicity: int = 1


ARC_KINDS = ("input", "output", "inhibitor")


@dataclass
class ValidationReport:
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "ok" if self.ok else "\n".join(self.diagnostics)


class Net:
    """An immutable generalized stochastic Petri net.

    Construction does not validate; call :func:`validate_net` (builders and the
    model-file parser do this for you).
    """

    def __init__(self, places: Sequence[Place], transitions: Sequence[Transition],
                 arcs: Sequence[Arc], name: str = ""):
        self._places = tuple(places)
        self._transitions = tuple(transitions)
        self._arcs = tuple(arcs)
        self.name = name
        self._place_index = {p.name: p.id for p in self._places}
        self._transition_index = {t.name: t.id for t in self._transitions}

        n_p, n_t = len(self._places), len(self._transitions)
        pre = np.zeros((n_t, n_p), dtype=np.int64)
        post = np.zeros((n_t, n_p), dtype=np.int64)
        inhib = np.zeros((n_t, n_p), dtype=np.int64)
        self._inputs = [[] for _ in range(n_t)]
        self._outputs = [[] for _ in range(n_t)]
        self._inhibitors = [[] for _ in range(n_t)]
        for a in self._arcs:
            if not (0 <= a.place < n_p and 0 <= a.transition < n_t):
                continue
            if a.kind == "input":
                pre[a.transition, a.place] += a.multiplicity
                self._inputs[a.transition].append((a.place, a.multiplicity))
            elif a.kind == "output":
                post[a.transition, a.place] += a.multiplicity
                self._outputs[a.transition].append((a.place, a.multiplicity))
            elif a.kind == "inhibitor":
                inhib[a.transition, a.place] = a.multiplicity
                self._inhibitors[a.transition].append((a.place, a.multiplicity))
        for m in (pre, post, inhib):
            m.setflags(write=False)
        self.pre, self.post, self.inhibit = pre, post, inhib

        self._guards = []
        for t in self._transitions:
            if t.guard is None:
                self._guards.append(None)
                continue
            try:
                self._guards.append(bind(t.guard, self.place_names))
            except UnknownPlaceError:
                self._guards.append(None)

    # -- accessors -----------------------------------------------------
    @property
    def places(self) -> tuple:
        return self._places

    @property
    def transitions(self) -> tuple:
        return self._transitions

    @property
    def arcs(self) -> tuple:
        return self._arcs

    @property
    def place_names(self) -> list:
        return [p.name for p in self._places]

    @property
    def transition_names(self) -> list:
        return [t.name for t in self._transitions]

    def place(self, name: str) -> Place:
        return self._places[self._place_index[name]]

    def transition(self, name: str) -> Transition:
        return self._transitions[self._transition_index[name]]

    def place_id(self, name: str) -> int:
        return self._place_index[name]

    def transition_id(self, name: str) -> int:
        return self._transition_index[name]

    def inputs(self, t: int):
        return self._inputs[t]

    def outputs(self, t: int):
        return self._outputs[t]

    def inhibitors(self, t: int):
        return self._inhibitors[t]

    def guard(self, t: int):
        """Bound guard of transition ``t`` (``None`` if unguarded)."""
        return self._guards[t]

    @property
    def initial_marking(self) -> Marking:
        return tuple(p.initial_tokens for p in self._places)

    def marking(self, **tokens) -> Marking:
        """Initial marking with selected places overridden by name."""
        m = list(self.initial_marking)
        for name, value in tokens.items():
            m[self._place_index[name]] = value
        return tuple(m)

    def as_dict(self, m: Marking) -> dict:
        return {p.name: m[p.id] for p in self._places}

    def has_deterministic(self) -> bool:
        return any(isinstance(t.kind, Deterministic) for t in self._transitions)

    # -- derived nets ---------------------------------------------------
    def with_kinds(self, kinds: dict) -> "Net":
        """Copy with the firing kind of named transitions replaced."""
        unknown = set(kinds) - set(self._transition_index)
        if unknown:
            raise KeyError(f"unknown transition(s): {sorted(unknown)}")
        transitions = [replace(t, kind=kinds.get(t.name, t.kind)) for t in self._transitions]
        return Net(self._places, transitions, self._arcs, self.name)

    def with_means(self, means: dict) -> "Net":
        """Copy with the mean of named exponential transitions replaced."""
        return self.with_kinds({name: Exponential(float(v)) for name, v in means.items()})

    def without_transitions(self, names: Iterable[str]) -> "Net":
        """Copy with the named transitions (and their arcs) removed."""
        drop = set(names)
        unknown = drop - set(self._transition_index)
        if unknown:
            raise KeyError(f"unknown transition(s): {sorted(unknown)}")
        kept = [t for t in self._transitions if t.name not in drop]
        remap = {t.id: i for i, t in enumerate(kept)}
        transitions = [replace(t, id=remap[t.id]) for t in kept]
        arcs = [replace(a, transition=remap[a.transition]) for a in self._arcs if a.transition in remap]
        return Net(self._places, transitions, arcs, self.name)

    def __repr__(self):
        return (f"Net({self.name!r}, places={len(self._places)}, "
                f"transitions={len(self._transitions)}, arcs={len(self._arcs)})")


class NetBuilder:
    """Incremental construction by name.

    >>> b = NetBuilder("onoff")
    >>> b.place("On", 1); b.place("Off")
    >>> b.exponential("T0", 10.0, inputs=["On"], outputs=["Off"])
    >>> net = b.build()
    """

    def __init__(self, name: str = ""):
        self.name = name
        self._places: list[Place] = []
        self._transitions: list[Transition] = []
        self._arcs: list[tuple] = []

    def place(self, name: str, tokens: int = 0) -> None:
        self._places.append(Place(len(self._places), name, tokens))

    def transition(self, name: str, kind: Kind, *, inputs=(), outputs=(), inhibitors=(),
                   guard: Expr | str | None = None) -> None:
        if isinstance(guard, str):
            guard = parse_metric(guard)
        tid = len(self._transitions)
        self._transitions.append(Transition(tid, name, kind, guard))
        for arc_kind, places in (("input", inputs), ("output", outputs), ("inhibitor", inhibitors)):
            for p in places:
                mult = 1
                if isinstance(p, tuple):
                    p, mult = p
                self._arcs.append((arc_kind, p, tid, mult))

    def exponential(self, name: str, mean: float, **kw) -> None:
        self.transition(name, Exponential(float(mean)), **kw)

    def deterministic(self, name: str, delay: float, **kw) -> None:
        self.transition(name, Deterministic(float(delay)), **kw)

    def immediate(self, name: str, priority: int = 1, weight: float = 1.0, **kw) -> None:
        self.transition(name, Immediate(priority, weight), **kw)

    def build(self) -> Net:
        index = {p.name: p.id for p in self._places}
        arcs = [Arc(kind, index.get(p, -1), tid, mult) for kind, p, tid, mult in self._arcs]
        return Net(self._places, self._transitions, arcs, self.name)


def validate_net(net: Net) -> ValidationReport:
    """Collect every structural problem of ``net``; never raises."""
    diags = []
    n_p, n_t = len(net.places), len(net.transitions)
    if n_p == 0:
        diags.append("net has no places")
    if n_t == 0:
        diags.append("net has no transitions")

    seen = set()
    for p in net.places:
        if p.name in seen:
            diags.append(f"duplicate place name {p.name!r}")
        seen.add(p.name)
        if p.initial_tokens < 0:
            diags.append(f"place {p.name!r}: negative initial tokens")
    seen = set()
    for t in net.transitions:
        if t.name in seen:
            diags.append(f"duplicate transition name {t.name!r}")
        seen.add(t.name)
        k = t.kind
        if isinstance(k, Exponential) and not k.mean > 0:
            diags.append(f"transition {t.name!r}: nonpositive mean {k.mean}")
        elif isinstance(k, Deterministic) and not k.delay > 0:
            diags.append(f"transition {t.name!r}: nonpositive delay {k.delay}")
        elif isinstance(k, Immediate):
            if k.priority < 1:
                diags.append(f"transition {t.name!r}: priority must be >= 1")
            if not k.weight > 0:
                diags.append(f"transition {t.name!r}: nonpositive weight {k.weight}")
        if t.guard is not None:
            try:
                bind(t.guard, net.place_names)
            except UnknownPlaceError as exc:
                for name in exc.names:
                    diags.append(f"transition {t.name!r}: guard references unknown place {name!r}")
    for a in net.arcs:
        if a.kind not in ARC_KINDS:
            diags.append(f"arc has invalid kind {a.kind!r}")
        if not 0 <= a.place < n_p:
            diags.append(f"arc references unknown place (id {a.place})")
        if not 0 <= a.transition < n_t:
            diags.append(f"arc references unknown transition (id {a.transition})")
        if a.multiplicity < 1:
            diags.append(f"arc multiplicity must be positive (got {a.multiplicity})")
    return ValidationReport(diags)


def _check_marking(net: Net, m) -> None:
    if len(m) != len(net.places):
        raise ValueError(f"marking has length {len(m)}, net has {len(net.places)} places")


def structurally_enabled(net: Net, m: Marking, t: int) -> bool:
    for p, k in net.inputs(t):
        if m[p] < k:
            return False
    for p, k in net.inhibitors(t):
        if m[p] >= k:
            return False
    g = net.guard(t)
    return g is None or bool(g(m))


def enabled_transitions(net: Net, m: Marking) -> list:
    """Ids of the transitions that may fire in ``m``, in increasing order.

    Immediate transitions take precedence: if any is enabled, only those of the
    highest enabled priority are returned.
    """
    _check_marking(net, m)
    timed, immediate = [], []
    for t in net.transitions:
        if structurally_enabled(net, m, t.id):
            (immediate if t.immediate else timed).append(t)
    if immediate:
        top = max(t.kind.priority for t in immediate)
        return [t.id for t in immediate if t.kind.priority == top]
    return [t.id for t in timed]


def fire(net: Net, m: Marking, t: int) -> Marking:
    """Marking reached by firing ``t`` in ``m``; ``m`` itself is untouched."""
    if t not in enabled_transitions(net, m):
        raise NotEnabledError(f"transition {net.transitions[t].name!r} is not enabled")
    return fire_unchecked(net, m, t)


def fire_unchecked(net: Net, m: Marking, t: int) -> Marking:
    out = list(m)
    for p, k in net.inputs(t):
        out[p] -= k
    for p, k in net.outputs(t):
        out[p] += k
    return tuple(out)


def guard_text(t: Transition) -> str | None:
    return None if t.guard is None else format_metric(t.guard, wrap=False)
