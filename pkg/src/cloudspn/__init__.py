"""Generalized stochastic Petri nets for availability and reliability analysis
of redundant private-cloud deployments."""

from .metric import BoundMetric, bind, format_metric, parse_metric
from .net import (Deterministic, Exponential, Immediate, Net, NetBuilder, enabled_transitions,
                  fire, validate_net)
from .numerics import (AvailabilityReport, ReliabilityCurve, SolverOptions, analyze,
                       availability_report, reliability_curve, steady_availability, steady_state,
                       transient)
from .simulator import SimEstimate, SimOptions, simulate_availability, simulate_reliability
from .statespace import build_ctmc, classify_states, eliminate_vanishing, explore, to_dot
from .zoo import ParamSet, build_model

__version__ = "0.1.0"

__all__ = [
    "AvailabilityReport",
    "BoundMetric",
    "Deterministic",
    "Exponential",
    "Immediate",
    "Net",
    "NetBuilder",
    "ParamSet",
    "ReliabilityCurve",
    "SimEstimate",
    "SimOptions",
    "SolverOptions",
    "analyze",
    "availability_report",
    "bind",
    "build_ctmc",
    "build_model",
    "classify_states",
    "eliminate_vanishing",
    "enabled_transitions",
    "explore",
    "fire",
    "format_metric",
    "parse_metric",
    "reliability_curve",
    "simulate_availability",
    "simulate_reliability",
    "steady_availability",
    "steady_state",
    "to_dot",
    "transient",
    "validate_net",
]
