"""Reachability graph exploration and reduction to a tangible CTMC."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .metric import BoundMetric
from .net import Deterministic, Marking, Net, enabled_transitions, fire_unchecked

__all__ = [
    "StateSpaceError",
    "StateSpaceOverflow",
    "UnboundedNetError",
    "VanishingCycleError",
    "AnalyticUnsupportedError",
    "Edge",
    "ReachabilityGraph",
    "Ctmc",
    "Partition",
    "explore",
    "eliminate_vanishing",
    "build_ctmc",
    "classify_states",
    "to_dot",
]


class StateSpaceError(RuntimeError):
    pass


class StateSpaceOverflow(StateSpaceError):
    def __init__(self, count: int, limit: int):
        super().__init__(f"state space exceeds max_states={limit} (reached {count} states)")
        self.count = count
        self.limit = limit


class UnboundedNetError(StateSpaceError):
    pass


class VanishingCycleError(StateSpaceError):
    def __init__(self, markings):
        self.markings = list(markings)
        shown = " -> ".join(str(m) for m in self.markings)
        super().__init__(f"cycle among vanishing markings: {shown}")


class AnalyticUnsupportedError(StateSpaceError):
    pass


class Edge(NamedTuple):
    source: int
    transition: int
    target: int
    value: float  # rate per hour (timed) or branching probability (immediate)
    immediate: bool


@dataclass(frozen=True)
class ReachabilityGraph:
    net: Net
    states: tuple  # markings, BFS order
    vanishing: np.ndarray  # bool per state
    edges: tuple
    initial: int = 0

    @property
    def num_tangible(self) -> int:
        return int((~self.vanishing).sum())

    @property
    def num_vanishing(self) -> int:
        return int(self.vanishing.sum())

    def successors(self, s: int):
        return [e for e in self.edges if e.source == s]


@dataclass(frozen=True)
class Ctmc:
    """Tangible-state CTMC. ``Q`` is a CSR generator with rates per hour."""

    states: tuple
    Q: sp.csr_matrix
    initial: np.ndarray
    place_names: tuple = ()

    @property
    def n(self) -> int:
        return len(self.states)

    def exit_rates(self) -> np.ndarray:
        return -self.Q.diagonal()

    def index(self, marking: Marking) -> int:
        return self.states.index(tuple(marking))

    def absorbing(self, mask) -> "Ctmc":
        """Copy where every state selected by ``mask`` has its outgoing rates removed."""
        keep = sp.diags((~np.asarray(mask, dtype=bool)).astype(float))
        return Ctmc(self.states, (keep @ self.Q).tocsr(), self.initial, self.place_names)


class Partition(NamedTuple):
    up: np.ndarray
    down: np.ndarray

    @property
    def mask(self) -> np.ndarray:
        n = len(self.up) + len(self.down)
        out = np.zeros(n, dtype=bool)
        out[self.up] = True
        return out


def explore(net: Net, max_states: int = 1_000_000, token_cap: int = 64) -> ReachabilityGraph:
    """Breadth-first token game from the initial marking.

    States are numbered in discovery order, so the result is reproducible.
    """
    if max_states < 1:
        raise ValueError("max_states must be positive")
    bad = [t.name for t in net.transitions if isinstance(t.kind, Deterministic)]
    if bad:
        raise AnalyticUnsupportedError(
            f"deterministic transition(s) {bad} cannot be analysed as a CTMC; "
            "use the simulator or the exponential variant of the model")

    m0 = net.initial_marking
    index = {m0: 0}
    states = [m0]
    vanishing = []
    edges = []
    queue = deque([m0])
    while queue:
        m = queue.popleft()
        s = index[m]
        enabled = enabled_transitions(net, m)
        is_vanishing = bool(enabled) and net.transitions[enabled[0]].immediate
        vanishing.append(is_vanishing)
        if is_vanishing:
            total = sum(net.transitions[t].kind.weight for t in enabled)
        for t in enabled:
            m2 = fire_unchecked(net, m, t)
            if max(m2) > token_cap:
                raise UnboundedNetError(
                    f"token count {max(m2)} exceeds cap {token_cap} after firing "
                    f"{net.transitions[t].name!r}; the net may be unbounded")
            d = index.get(m2)
            if d is None:
                if len(states) >= max_states:
                    raise StateSpaceOverflow(len(states) + 1, max_states)
                d = len(states)
                index[m2] = d
                states.append(m2)
                queue.append(m2)
            kind = net.transitions[t].kind
            if is_vanishing:
                edges.append(Edge(s, t, d, kind.weight / total, True))
            else:
                edges.append(Edge(s, t, d, kind.rate, False))
    return ReachabilityGraph(net, tuple(states), np.array(vanishing, dtype=bool), tuple(edges), 0)


def _absorption(graph: ReachabilityGraph, out_edges):
    """Map each vanishing state to {tangible state: probability}."""
    memo: dict[int, dict] = {}
    on_stack: list[int] = []

    def visit(s):
        if s in memo:
            return memo[s]
        if s in on_stack:
            cycle = on_stack[on_stack.index(s):] + [s]
            raise VanishingCycleError([graph.states[i] for i in cycle])
        on_stack.append(s)
        dist: dict[int, float] = {}
        for e in out_edges[s]:
            if graph.vanishing[e.target]:
                for k, p in visit(e.target).items():
                    dist[k] = dist.get(k, 0.0) + e.value * p
            else:
                dist[e.target] = dist.get(e.target, 0.0) + e.value
        on_stack.pop()
        memo[s] = dist
        return dist

    for s in np.flatnonzero(graph.vanishing):
        visit(int(s))
    return memo


def eliminate_vanishing(graph: ReachabilityGraph) -> Ctmc:
    """Fold zero-time vanishing markings into the rates between tangible ones."""
    out_edges = [[] for _ in graph.states]
    for e in graph.edges:
        out_edges[e.source].append(e)
    absorb = _absorption(graph, out_edges)

    tangible = np.flatnonzero(~graph.vanishing)
    new_index = {int(s): i for i, s in enumerate(tangible)}
    rows, cols, vals = [], [], []
    for s in tangible:
        i = new_index[int(s)]
        for e in out_edges[s]:
            targets = absorb[e.target].items() if graph.vanishing[e.target] else ((e.target, 1.0),)
            for d, p in targets:
                j = new_index[d]
                if j != i:
                    rows.append(i)
                    cols.append(j)
                    vals.append(e.value * p)
    n = len(tangible)
    Q = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    Q.sum_duplicates()
    Q = (Q - sp.diags(np.asarray(Q.sum(axis=1)).ravel())).tocsr()

    initial = np.zeros(n)
    if graph.vanishing[graph.initial]:
        for d, p in absorb[graph.initial].items():
            initial[new_index[d]] += p
    else:
        initial[new_index[graph.initial]] = 1.0
    states = tuple(graph.states[s] for s in tangible)
    return Ctmc(states, Q, initial, tuple(graph.net.place_names))


def build_ctmc(net: Net, max_states: int = 1_000_000) -> Ctmc:
    return eliminate_vanishing(explore(net, max_states))


def classify_states(ctmc: Ctmc, bm: BoundMetric) -> Partition:
    """Split tangible states into those where ``bm`` holds (up) and the rest."""
    if ctmc.n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return Partition(empty, empty)
    mask = np.asarray(bm(np.array(ctmc.states)), dtype=bool)
    return Partition(np.flatnonzero(mask), np.flatnonzero(~mask))


def _marking_label(net: Net, m: Marking) -> str:
    marked = [f"{name}={k}" if k != 1 else name for name, k in zip(net.place_names, m) if k]
    return "\\n".join(marked) or "(empty)"


def to_dot(graph: ReachabilityGraph) -> str:
    """Graphviz rendering: tangible states solid, vanishing states dashed."""
    net = graph.net
    lines = [f'digraph "{net.name or "reachability"}" {{', "  rankdir=LR;",
             '  node [shape=box, fontsize=10];']
    for s, m in enumerate(graph.states):
        style = "dashed" if graph.vanishing[s] else "solid"
        extra = ", peripheries=2" if s == graph.initial else ""
        lines.append(f'  s{s} [label="s{s}\\n{_marking_label(net, m)}", style={style}{extra}];')
    for e in graph.edges:
        name = net.transitions[e.transition].name
        if e.immediate:
            label = f"{name}\\np={e.value:.6g}"
            lines.append(f'  s{e.source} -> s{e.target} [label="{label}", style=dashed];')
        else:
            label = f"{name}\\nrate={e.value:.6g}"
            lines.append(f'  s{e.source} -> s{e.target} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
