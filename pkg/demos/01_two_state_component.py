"""
A single repairable component
=============================

The smallest useful availability model has one place for "up", one for
"down" and two exponential transitions between them.
"""

from cloudspn import zoo
from cloudspn.numerics import analyze, transient
from cloudspn.statespace import build_ctmc, explore, to_dot

net, metric = zoo.build_onoff(mttf=1259.03, mttr=0.77)
print(net)
print("metric:", metric)

# The reachability graph has two markings and no zero-time states.
graph = explore(net)
print("\nreachable markings:", graph.states)
print(to_dot(graph))

# Steady state agrees with MTTF / (MTTF + MTTR).
report = analyze(net, metric)
print(f"availability {report.percent:.5f} %  closed form {100 * 1259.03 / 1259.80:.5f} %")
print(f"nines {report.nines:.2f}, downtime {report.downtime_hours_per_year:.2f} h/yr")

# Starting from "up", the probability of being up relaxes to that value
# within a few repair times.
ctmc = build_ctmc(net)
for t in (0.0, 0.5, 1.0, 2.0, 5.0):
    p_up = transient(ctmc, t).distribution[0]
    print(f"P(up at t={t:4.1f} h) = {p_up:.7f}")

# A parameter sweep: halving repair time buys roughly a third of a nine.
for mttr in (2.0, 1.0, 0.5, 0.25):
    r = analyze(*zoo.build_onoff(1259.03, mttr))
    print(f"mttr {mttr:5.2f} h -> {r.nines:.2f} nines")
