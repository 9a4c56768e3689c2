"""
Writing a model by hand
=======================

Nets can be described in a small text format and analysed like the
bundled ones. Here: two web servers behind a load balancer, with a single
repair crew that works on one server at a time.
"""

from cloudspn.modelfile import parse_model_file, serialize_model
from cloudspn.numerics import analyze
from cloudspn.statespace import build_ctmc

TEXT = """
[params]
mttf_web = 800
mttr_web = 2
mttf_lb = 5000
mttr_lb = 1

[places]
Web_Up = 2
Web_Down = 0
Crew = 1
Fixing = 0
LB_On = 1
LB_Off = 0

[transitions]
FailWeb: exponential mean=$mttf_web
StartFix: immediate priority=1 weight=1
EndFix: exponential mean=$mttr_web
FailLB: exponential mean=$mttf_lb
RepairLB: exponential mean=$mttr_lb

[arcs]
Web_Up -> FailWeb
FailWeb -> Web_Down
Web_Down -> StartFix
Crew -> StartFix
StartFix -> Fixing
Fixing -> EndFix
EndFix -> Web_Up
EndFix -> Crew
LB_On -> FailLB
FailLB -> LB_Off
LB_Off -> RepairLB
RepairLB -> LB_On

[metrics]
service = P{(#LB_On = 1) AND (#Web_Up > 0)}
both_servers = P{#Web_Up = 2}
"""

mf = parse_model_file(TEXT, name="web")
print(f"{build_ctmc(mf.net).n} tangible states")
for name in mf.metrics:
    r = analyze(mf.net, mf.metric(name))
    print(f"{name:<13} {r.percent:.5f} %  ({r.nines:.2f} nines)")

# What if repairs took four times longer?
slow = parse_model_file(TEXT, {"mttr_web": 8.0}, name="web")
print(f"slow repairs: {analyze(slow.net, slow.metric('service')).percent:.5f} %")

# The canonical form keeps parameter references.
print()
print(serialize_model(mf.net, mf.metrics, mf.params, mf.bindings))
