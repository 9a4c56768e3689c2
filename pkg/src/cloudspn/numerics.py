"""Steady-state and transient CTMC solvers, availability and reliability metrics.

Steady state uses the Grassmann-Taksar-Heyman elimination (subtraction-free,
so it stays accurate on stiff failure/repair chains) for up to
``SolverOptions.dense_limit`` states and Gauss-Seidel sweeps above that.
Transient probabilities use uniformization.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve_triangular
from scipy.stats import poisson

from .metric import BoundMetric, bind
from .net import Net
from .statespace import Ctmc, Partition, build_ctmc, classify_states

HOURS_PER_YEAR = 8760.0

__all__ = [
    "HOURS_PER_YEAR",
    "SolverOptions",
    "SolverError",
    "ReducibleChainError",
    "ConvergenceError",
    "AvailabilityReport",
    "TransientResult",
    "ReliabilityCurve",
    "steady_state",
    "residual",
    "probability",
    "availability_report",
    "steady_availability",
    "analyze",
    "transient",
    "propagator",
    "reliability_curve",
]


class SolverError(RuntimeError):
    pass


class ReducibleChainError(SolverError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-12
    truncation_epsilon: float = 1e-10
    max_iterations: int = 100_000
    dense_limit: int = 2000
    method: str = "auto"  # "auto" | "direct" | "iterative"

    def __post_init__(self):
        if not (self.tolerance > 0 and self.truncation_epsilon > 0 and self.max_iterations > 0):
            raise ValueError("solver options must be positive")
        if self.method not in ("auto", "direct", "iterative"):
            raise ValueError(f"unknown method {self.method!r}")


DEFAULT_OPTIONS = SolverOptions()


# ---------------------------------------------------------------------------
# steady state

def _recurrent_class(Q: sp.csr_matrix) -> np.ndarray:
    """Indices of the unique closed communicating class of ``Q``."""
    n = Q.shape[0]
    if n == 1:
        return np.array([0])
    adj = Q.copy()
    adj.setdiag(0)
    adj.eliminate_zeros()
    ncomp, labels = csgraph.connected_components(adj, directed=True, connection="strong")
    if ncomp == 1:
        return np.arange(n)
    coo = adj.tocoo()
    leaves = np.ones(ncomp, dtype=bool)
    leaves[labels[coo.row[labels[coo.row] != labels[coo.col]]]] = False
    closed = np.flatnonzero(leaves)
    if len(closed) != 1:
        raise ReducibleChainError(f"chain has {len(closed)} recurrent classes; steady state is not unique")
    return np.flatnonzero(labels == closed[0])


def _gth(Q: np.ndarray) -> np.ndarray:
    a = np.array(Q, dtype=float)
    np.fill_diagonal(a, 0.0)
    n = a.shape[0]
    for k in range(n - 1, 0, -1):
        s = a[k, :k].sum()
        if s <= 0.0:
            raise ReducibleChainError(f"state {k} cannot reach the remaining states")
        a[:k, k] /= s
        a[:k, :k] += np.outer(a[:k, k], a[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ a[:k, k]
    return pi / pi.sum()


def _gauss_seidel(Q: sp.csr_matrix, opts: SolverOptions) -> np.ndarray:
    A = Q.T.tocsr()
    lower = sp.tril(A, k=0, format="csr")
    upper = sp.triu(A, k=1, format="csr")
    n = A.shape[0]
    x = np.full(n, 1.0 / n)
    scale = max(1.0, float(np.abs(Q.diagonal()).max()))
    res = np.inf
    for _ in range(opts.max_iterations):
        x = spsolve_triangular(lower, -(upper @ x), lower=True)
        x = np.abs(x)
        x /= x.sum()
        res = float(np.abs(Q.T @ x).max())
        if res <= opts.tolerance * scale:
            return x
    raise ConvergenceError(f"Gauss-Seidel did not converge in {opts.max_iterations} sweeps", res)


def residual(ctmc: Ctmc, pi: np.ndarray) -> float:
    """max |pi Q|."""
    return float(np.abs(ctmc.Q.T @ pi).max()) if ctmc.n else 0.0


def steady_state(ctmc: Ctmc, opts: SolverOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Stationary distribution ``pi`` with ``pi Q = 0`` and ``sum(pi) = 1``.

    Transient states (outside the single closed class) get probability zero.
    Raises :class:`ReducibleChainError` if more than one closed class exists.
    """
    Q = ctmc.Q
    n = Q.shape[0]
    if n == 0:
        raise SolverError("empty chain")
    keep = _recurrent_class(Q)
    sub = Q[keep][:, keep].tocsr()
    direct = opts.method == "direct" or (opts.method == "auto" and len(keep) <= opts.dense_limit)
    if direct:
        sub_pi = _gth(sub.toarray())
    else:
        sub_pi = _gauss_seidel(sub, opts)
    pi = np.zeros(n)
    pi[keep] = sub_pi
    scale = max(1.0, float(np.abs(Q.diagonal()).max()))
    res = residual(ctmc, pi)
    if res > opts.tolerance * scale:
        raise ConvergenceError("steady-state residual above tolerance", res)
    return pi


def probability(pi: np.ndarray, partition: Partition) -> float:
    """Probability mass on the up-set of ``partition``."""
    return float(np.sum(pi[partition.up])) if len(partition.up) else 0.0


@dataclass(frozen=True)
class AvailabilityReport:
    availability: float
    nines: float
    downtime_hours_per_year: float

    @property
    def percent(self) -> float:
        return 100.0 * self.availability


def availability_report(a: float) -> AvailabilityReport:
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"availability must lie in [0, 1], got {a}")
    unavailability = 1.0 - a
    nines = math.inf if unavailability == 0.0 else -math.log10(unavailability)
    return AvailabilityReport(a, nines, unavailability * HOURS_PER_YEAR)


def _bound(metric, net: Net) -> BoundMetric:
    return metric if isinstance(metric, BoundMetric) else bind(metric, net)


def steady_availability(net: Net, metric, opts: SolverOptions = DEFAULT_OPTIONS) -> float:
    """Steady-state probability that ``metric`` holds."""
    ctmc = build_ctmc(net)
    pi = steady_state(ctmc, opts)
    return probability(pi, classify_states(ctmc, _bound(metric, net)))


def analyze(net: Net, metric, opts: SolverOptions = DEFAULT_OPTIONS) -> AvailabilityReport:
    return availability_report(min(1.0, max(0.0, steady_availability(net, metric, opts))))


# ---------------------------------------------------------------------------
# transient

@dataclass(frozen=True)
class TransientResult:
    distribution: np.ndarray
    error_bound: float
    rate: float
    terms: int


def _uniformized(ctmc: Ctmc):
    exit_max = float(ctmc.exit_rates().max()) if ctmc.n else 0.0
    if exit_max <= 0.0:
        return 0.0, None
    lam = 1.02 * exit_max
    P = (sp.identity(ctmc.n, format="csr") + ctmc.Q / lam).tocsr()
    return lam, P


def _poisson_weights(mean: float, eps: float):
    """Weights w[k] = Poisson(k; mean) for k = left..right and the omitted mass."""
    if mean <= 0:
        return 0, np.array([1.0]), 0.0
    left = int(poisson.ppf(eps / 2, mean)) if mean > 50 else 0
    right = poisson.isf(eps / 2, mean)
    if not np.isfinite(right):
        # isf loses precision for tails near machine epsilon; search sf directly
        ks = np.arange(0, int(mean + 20 * math.sqrt(mean) + 60))
        right = ks[np.argmax(poisson.sf(ks, mean) < eps / 2)]
    right = int(right) + 1
    ks = np.arange(left, right + 1)
    w = poisson.pmf(ks, mean)
    omitted = float(poisson.cdf(left - 1, mean) + poisson.sf(right, mean)) if left > 0 else float(poisson.sf(right, mean))
    return left, w, omitted


_SERIES_LIMIT = 4096


def propagator(ctmc: Ctmc, dt: float, opts: SolverOptions = DEFAULT_OPTIONS):
    """Dense matrix ``exp(Q dt)`` by uniformization with scaling and squaring.

    The interval is halved until the uniformized Poisson mean is at most 1,
    the series is summed there, and the result squared back up. Returns the
    matrix and a bound on the total truncation error (row-sum deficit).
    """
    lam, P = _uniformized(ctmc)
    n = ctmc.n
    if P is None or dt == 0:
        return np.eye(n), 0.0
    squarings = max(0, math.ceil(math.log2(lam * dt))) if lam * dt > 1 else 0
    h = dt / 2 ** squarings
    eps = opts.truncation_epsilon / 2 ** squarings
    left, w, omitted = _poisson_weights(lam * h, eps)
    Pd = P.toarray()
    term = np.eye(n)
    M = np.zeros((n, n))
    for k in range(left + len(w)):
        if k >= left:
            M += w[k - left] * term
        term = term @ Pd
    for _ in range(squarings):
        M = M @ M
    return M, omitted * 2 ** squarings


def transient(ctmc: Ctmc, t: float, opts: SolverOptions = DEFAULT_OPTIONS,
              initial: Optional[np.ndarray] = None) -> TransientResult:
    """State distribution at time ``t`` (hours) from the chain's initial distribution."""
    if t < 0:
        raise ValueError("t must be non-negative")
    pi0 = np.asarray(ctmc.initial if initial is None else initial, dtype=float)
    lam, P = _uniformized(ctmc)
    if P is None or t == 0:
        return TransientResult(pi0.copy(), 0.0, lam, 0)
    mean = lam * t
    if mean <= _SERIES_LIMIT or ctmc.n > opts.dense_limit:
        left, w, omitted = _poisson_weights(mean, opts.truncation_epsilon)
        PT = P.T.tocsr()
        v = pi0.copy()
        out = np.zeros_like(v)
        for k in range(left + len(w)):
            if k >= left:
                out += w[k - left] * v
            v = PT @ v
        terms = left + len(w)
    else:
        M, omitted = propagator(ctmc, t, opts)
        out = pi0 @ M
        terms = -1
    total = out.sum()
    if total > 0:
        out = out / total
    return TransientResult(out, omitted, lam, terms)


# ---------------------------------------------------------------------------
# reliability

@dataclass(frozen=True)
class ReliabilityCurve:
    times: np.ndarray
    values: np.ndarray
    horizon: float
    label: str = ""
    error_bound: float = 0.0

    @property
    def samples(self):
        return list(zip(self.times.tolist(), self.values.tolist()))

    def at(self, t: float) -> float:
        i = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[i], t, rel_tol=0, abs_tol=1e-9):
            raise KeyError(f"t={t} is not a sample point")
        return float(self.values[i])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t_hours,reliability\n")
        for t, r in zip(self.times, self.values):
            buf.write(f"{t:.12g},{r:.12g}\n")
        return buf.getvalue()


def sample_times(horizon: float, step: float) -> np.ndarray:
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if not 0 < step <= horizon:
        raise ValueError("step must satisfy 0 < step <= horizon")
    n = int(math.floor(horizon / step + 1e-9))
    times = float(step) * np.arange(n + 1, dtype=float)
    if horizon - times[-1] > 1e-9 * horizon:
        times = np.append(times, float(horizon))
    return times


def reliability_curve(net: Net, metric, horizon: float, step: float,
                      opts: SolverOptions = DEFAULT_OPTIONS, *, absorbing: bool = True,
                      label: str = "") -> ReliabilityCurve:
    """R(t) sampled at 0, step, 2*step, ..., horizon.

    With ``absorbing=True`` every state where ``metric`` fails is made absorbing
    and R(t) is the probability of not having been absorbed by ``t`` (first
    passage to the down-set). With ``absorbing=False`` R(t) is just the
    transient probability that ``metric`` holds at ``t``; combine it with a net
    whose repair transitions have been removed to get the non-repairable
    reliability.
    """
    times = sample_times(horizon, step)
    ctmc = build_ctmc(net)
    part = classify_states(ctmc, _bound(metric, net))
    up = part.mask
    if float(ctmc.initial[up].sum()) == 0.0:
        warnings.warn("initial state violates the metric; reliability is identically zero", RuntimeWarning)
        return ReliabilityCurve(times, np.zeros_like(times), horizon, label)
    if absorbing:
        ctmc = ctmc.absorbing(~up)

    values = np.empty_like(times)
    v = ctmc.initial.astype(float)
    values[0] = v[up].sum()
    dense = ctmc.n <= opts.dense_limit
    M, err = propagator(ctmc, step, opts) if dense else (None, 0.0)
    total_err = 0.0
    for i in range(1, len(times)):
        dt = times[i] - times[i - 1]
        if not dense:
            res = transient(ctmc, dt, opts, initial=v)
            v = res.distribution
            total_err += res.error_bound
        elif math.isclose(dt, step, rel_tol=1e-12):
            v = v @ M
            total_err += err
        else:
            Mi, e = propagator(ctmc, dt, opts)
            v = v @ Mi
            total_err += e
        v = v / v.sum()
        values[i] = v[up].sum()
    return ReliabilityCurve(times, values, horizon, label, total_err)
