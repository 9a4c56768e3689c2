"""Discrete-event Monte Carlo execution of a GSPN.

The simulator plays the token game directly on the net, without building the
state space, so it serves as an independent check of the analytic pipeline.
Replications are advanced in lockstep as rows of numpy arrays. Each
replication draws from its own random stream spawned from ``(seed, r)``, so
its trajectory does not depend on which other replications run beside it.

Timed transitions keep their sampled firing time while they stay enabled
(enabling memory) and drop it when disabled. Simultaneous events fire in
transition-id order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .metric import BoundMetric, bind, format_metric
from .net import Deterministic, Exponential, Immediate, Net

__all__ = [
    "SimOptions",
    "SimEstimate",
    "SimulationError",
    "LivelockError",
    "simulate_availability",
    "simulate_reliability",
    "replication_rng",
]

MAX_ZERO_TIME_FIRINGS = 1_000_000


class SimulationError(RuntimeError):
    pass


class LivelockError(SimulationError):
    pass


@dataclass(frozen=True)
class SimOptions:
    horizon: float
    replications: int = 100
    seed: int = 0
    warmup: float = 0.0
    chunk_size: int = 256

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not 0 <= self.warmup < self.horizon:
            raise ValueError("warmup must lie in [0, horizon)")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be positive")


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    ci95_halfwidth: float
    replications: int

    @property
    def interval(self) -> tuple:
        return (self.mean - self.ci95_halfwidth, self.mean + self.ci95_halfwidth)

    def contains(self, value: float) -> bool:
        lo, hi = self.interval
        return lo <= value <= hi


def replication_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(r,))))


def _estimate(samples: np.ndarray) -> SimEstimate:
    n = len(samples)
    mean = float(np.sum(samples) / n)
    if n == 1:
        return SimEstimate(mean, float("inf"), 1)
    sd = float(np.std(samples, ddof=1))
    half = float(stats.t.ppf(0.975, n - 1) * sd / np.sqrt(n))
    return SimEstimate(mean, half, n)


class _Streams:
    """Per-replication uniform buffers."""

    def __init__(self, seed: int, reps: range, block: int):
        self.gens = [replication_rng(seed, r) for r in reps]
        self.block = block
        self.buf = np.stack([g.random(block) for g in self.gens])
        self.ptr = np.zeros(len(self.gens), dtype=np.int64)

    def ensure(self, rows: np.ndarray, need: np.ndarray) -> None:
        short = rows[self.ptr[rows] + need > self.block]
        for r in short:
            self.buf[r] = self.gens[r].random(self.block)
            self.ptr[r] = 0

    def take(self, rows: np.ndarray, count: np.ndarray) -> None:
        self.ptr[rows] += count


class _CompiledNet:
    def __init__(self, net: Net):
        if not net.transitions:
            raise SimulationError("net has no transitions")
        self.net = net
        self.pre = np.asarray(net.pre)
        self.delta = np.asarray(net.post - net.pre)
        self.inhibit = np.asarray(net.inhibit)
        self.has_inhibit = bool(self.inhibit.any())
        self.input_sets = [np.flatnonzero(self.pre[t]) for t in range(len(net.transitions))]
        kinds = [t.kind for t in net.transitions]
        self.immediate = np.array([isinstance(k, Immediate) for k in kinds])
        self.exponential = np.array([isinstance(k, Exponential) for k in kinds])
        self.deterministic = np.array([isinstance(k, Deterministic) for k in kinds])
        self.priority = np.array([k.priority if isinstance(k, Immediate) else 0 for k in kinds])
        self.weight = np.array([k.weight if isinstance(k, Immediate) else 0.0 for k in kinds])
        self.mean = np.array([k.mean if isinstance(k, Exponential) else
                              k.delay if isinstance(k, Deterministic) else 0.0 for k in kinds])
        guards: dict[str, tuple] = {}
        for t in net.transitions:
            if t.guard is not None:
                key = format_metric(t.guard)
                if key not in guards:
                    guards[key] = (bind(t.guard, net), [])
                guards[key][1].append(t.id)
        self.guards = list(guards.values())

    def enabled(self, M: np.ndarray) -> np.ndarray:
        E = np.all(M[:, None, :] >= self.pre[None, :, :], axis=2)
        if self.has_inhibit:
            blocked = (self.inhibit[None, :, :] > 0) & (M[:, None, :] >= self.inhibit[None, :, :])
            E &= ~blocked.any(axis=2)
        for bm, ids in self.guards:
            E[:, ids] &= bm(M)[:, None]
        return E


def _run(cn: _CompiledNet, metric: BoundMetric, reps: range, seed: int, horizon: float,
         warmup: float, stop_on_failure: bool):
    """Simulate replications ``reps``; returns (uptime, failed) arrays."""
    R = len(reps)
    T = len(cn.net.transitions)
    M = np.tile(np.asarray(cn.net.initial_marking, dtype=np.int64), (R, 1))
    clock = np.zeros(R)
    sched = np.full((R, T), np.inf)
    uptime = np.zeros(R)
    failed = np.zeros(R, dtype=bool)
    zero_run = np.zeros(R, dtype=np.int64)
    active = np.ones(R, dtype=bool)
    streams = _Streams(seed, reps, block=max(1024, 8 * T))
    timed = ~cn.immediate
    rows_all = np.arange(R)

    while active.any():
        E = cn.enabled(M)
        imm = E & cn.immediate[None, :]
        has_imm = imm.any(axis=1) & active

        rows = rows_all[has_imm]
        if rows.size:
            streams.ensure(rows, np.ones(rows.size, dtype=np.int64))
            pr = np.where(imm[rows], cn.priority[None, :], -1)
            top = pr.max(axis=1, keepdims=True)
            w = np.where(pr == top, cn.weight[None, :], 0.0)
            cum = np.cumsum(w, axis=1)
            u = streams.buf[rows, streams.ptr[rows]]
            streams.take(rows, 1)
            pick = np.argmax(cum > (u * cum[:, -1])[:, None], axis=1)
            M[rows] += cn.delta[pick]
            zero_run[rows] += 1
            if (zero_run[rows] > MAX_ZERO_TIME_FIRINGS).any():
                raise LivelockError(f"more than {MAX_ZERO_TIME_FIRINGS} zero-time firings without "
                                    "clock advance")

        rows = rows_all[active & ~has_imm]
        if not rows.size:
            continue
        Et = E[rows] & timed[None, :]
        S = sched[rows]
        S[~Et] = np.inf
        new = Et & np.isinf(S)
        new_exp = new & cn.exponential[None, :]
        need = new_exp.sum(axis=1)
        streams.ensure(rows, need)
        if need.any():
            offs = np.cumsum(new_exp, axis=1) - 1
            idx = streams.ptr[rows][:, None] + offs
            u = np.take_along_axis(streams.buf[rows], np.minimum(idx, streams.block - 1), axis=1)
            draws = -cn.mean[None, :] * np.log1p(-u)
            S = np.where(new_exp, clock[rows][:, None] + draws, S)
            streams.take(rows, need)
        new_det = new & cn.deterministic[None, :]
        if new_det.any():
            S = np.where(new_det, clock[rows][:, None] + cn.mean[None, :], S)

        up = np.asarray(metric(M[rows]), dtype=bool)
        now = clock[rows]
        if stop_on_failure:
            down = ~up
            if down.any():
                failed[rows[down]] = True
                active[rows[down]] = False
                sched[rows] = S
                keep = ~down
                rows, S, up, now = rows[keep], S[keep], up[keep], now[keep]
                if not rows.size:
                    continue

        pick = np.argmin(S, axis=1)
        t_next = S[np.arange(rows.size), pick]
        end = np.minimum(t_next, horizon)
        overlap = np.clip(end - np.maximum(now, warmup), 0.0, None)
        uptime[rows] += np.where(up, overlap, 0.0)

        finishing = t_next >= horizon
        active[rows[finishing]] = False
        clock[rows[finishing]] = horizon
        go = ~finishing
        fr, fp = rows[go], pick[go]
        M[fr] += cn.delta[fp]
        clock[fr] = t_next[go]
        S[go, fp] = np.inf
        sched[rows] = S
        zero_run[fr] = 0

    return uptime, failed


def _check(net: Net, metric) -> BoundMetric:
    return metric if isinstance(metric, BoundMetric) else bind(metric, net)


def _chunks(opts: SimOptions):
    for start in range(0, opts.replications, opts.chunk_size):
        yield range(start, min(start + opts.chunk_size, opts.replications))


def simulate_availability(net: Net, metric, opts: SimOptions) -> SimEstimate:
    """Fraction of post-warmup time in ``[warmup, horizon]`` during which ``metric`` holds."""
    bm = _check(net, metric)
    cn = _CompiledNet(net)
    span = opts.horizon - opts.warmup
    parts = [_run(cn, bm, reps, opts.seed, opts.horizon, opts.warmup, False)[0] / span
             for reps in _chunks(opts)]
    return _estimate(np.concatenate(parts))


def simulate_reliability(net: Net, metric, t: float, opts: SimOptions) -> SimEstimate:
    """Fraction of replications in which ``metric`` holds throughout ``[0, t]``.

    ``opts.horizon`` is ignored; each replication runs to ``t`` or to the first
    tangible marking violating the metric.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    bm = _check(net, metric)
    cn = _CompiledNet(net)
    parts = [_run(cn, bm, reps, opts.seed, t, 0.0, True)[1] for reps in _chunks(opts)]
    survived = (~np.concatenate(parts)).astype(float)
    return _estimate(survived)
