"""Tour of the class space: who waits, who matches, who moves where.

Run:  python demos/01_class_space.py
"""

from liversim import (
    DONOR,
    Indication,
    build_model,
    default_config,
    enumerate_classes,
    is_compatible,
    recipient_classes,
)
from liversim.classes import parse_class_key
from liversim.transitions import meld_neighbors

# ---------------------------------------------------------------------------
# The 28 classes: one organ class and 27 patient classes
classes = enumerate_classes()
print(f"{len(classes)} classes; first is the organ class: {classes[0]}")

for ind in Indication:
    members = [c for c in recipient_classes() if c.indication is ind]
    waiting = sum(c.awaits_mxp for c in members)
    print(f"  {ind.name:6s}: {len(members):2d} classes ({waiting} waiting for an exception)")

# ---------------------------------------------------------------------------
# Compatibility: an organ can go to anyone except patients still waiting
# for their MELD exception.
matchable = [c for c in recipient_classes() if is_compatible(DONOR, c)]
blocked = [c for c in recipient_classes() if not is_compatible(DONOR, c)]
print(f"\nmatchable classes: {len(matchable)}; blocked while awaiting: {len(blocked)}")
for c in blocked:
    print(f"  blocked: {c}")

# ---------------------------------------------------------------------------
# MELD-band transition rates, derived from the arrival law. Every mobile
# class leaves at rate 1/2 per year; deterioration is twice as likely as
# improvement when both directions exist.
model = build_model(default_config())
graph = model.transitions

print("\nper-class MELD outflow (rate/year) and example destinations:")
for key in ("CIRRH.B1", "CIRRH.B4", "HCC.B6"):
    src = parse_class_key(key)
    ups, downs = meld_neighbors(src)
    total = graph.outflow(src)
    up_mass = sum(graph.rate(src, j) for j in ups)
    print(f"  {src}: outflow {total:.3f}/yr, upward share {up_mass / total:.3f} "
          f"({len(ups)} up / {len(downs)} down destinations)")

top = max(graph.meld_rates.items(), key=lambda kv: kv[1])
print(f"\nfastest single edge: {top[0][0]} -> {top[0][1]} at {top[1]:.4f}/yr")
print(f"grant edges (waiting -> exception, waiting time resets): {len(graph.grant_edges)}")
