"""
The baseline private cloud
==========================

Three hosts, three management VMs on Host2 and the Nextcloud VM on Host3.
Immediate transitions kill a host's VMs the instant it fails, and a VM can
only be repaired once its host is back.
"""

import numpy as np

from cloudspn import zoo
from cloudspn.metric import bind
from cloudspn.net import enabled_transitions, fire
from cloudspn.numerics import analyze, steady_state
from cloudspn.statespace import build_ctmc, classify_states, explore

net, metric = zoo.build_baseline()
print(net.place_names)

# Play the token game by hand: Host2 fails, then the kill transitions fire.
m = fire(net, net.initial_marking, net.transition_id("MTTF_Host2"))
while True:
    enabled = enabled_transitions(net, m)
    if not net.transitions[enabled[0]].immediate:
        break
    print("fires", net.transitions[enabled[0]].name)
    m = fire(net, m, enabled[0])
print({k: v for k, v in net.as_dict(m).items() if v})

# Exploration yields 114 markings, 60 of them vanishing.
g = explore(net)
print(f"\n{len(g.states)} markings, {g.num_vanishing} vanishing, {g.num_tangible} tangible")

ctmc = build_ctmc(net)
pi = steady_state(ctmc)
part = classify_states(ctmc, bind(metric, net))
print(f"up states: {len(part.up)}, down states: {len(part.down)}")

# The five most likely states.
order = np.argsort(pi)[::-1][:5]
for i in order:
    down = [p[:-4] for p, k in net.as_dict(ctmc.states[i]).items() if p.endswith("_Off") and k]
    print(f"  pi = {pi[i]:.6f}  down: {', '.join(down) or 'nothing'}")

r = analyze(net, metric)
print(f"\navailability {r.percent:.4f} %, {r.nines:.2f} nines, {r.downtime_hours_per_year:.2f} h/yr")
