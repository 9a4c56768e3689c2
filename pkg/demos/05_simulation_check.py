"""
Monte Carlo as an independent check
===================================

The simulator plays the token game directly, without building the state
space, so agreement with the analytic solver is a meaningful cross-check.
"""

from cloudspn import zoo
from cloudspn.numerics import reliability_curve, steady_availability
from cloudspn.simulator import SimOptions, simulate_availability, simulate_reliability

net, metric = zoo.build_baseline()
exact = steady_availability(net, metric)
est = simulate_availability(net, metric, SimOptions(horizon=1e5, replications=200, seed=42))
lo, hi = est.interval
print(f"analytic {exact:.6f}   simulated {est.mean:.6f}  95% CI [{lo:.6f}, {hi:.6f}]")

r500 = reliability_curve(net, metric, 500, 500).at(500)
est = simulate_reliability(net, metric, 500, SimOptions(horizon=500, replications=4000, seed=1))
print(f"R(500 h): analytic {r500:.4f}, simulated {est.mean:.4f} +/- {est.ci95_halfwidth:.4f}")

# Fixed activation delays can only be simulated. With 30 s against
# hour-scale repairs, the distribution of the delay barely matters.
exp_net, metric = zoo.build_vm_redundancy()
det_net, _ = zoo.build_vm_redundancy(deterministic_activation=True)
opts = SimOptions(horizon=1e5, replications=100, seed=7)
print(f"\nvm-red analytic (exponential activation) {steady_availability(exp_net, metric):.6f}")
for label, n in (("exponential", exp_net), ("deterministic", det_net)):
    e = simulate_availability(n, metric, opts)
    print(f"  simulated, {label:<13} activation {e.mean:.6f} +/- {e.ci95_halfwidth:.6f}")
