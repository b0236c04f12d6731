"""Who gets the organ? The three policies on one hand-built queue.

Run:  python demos/03_matching_policies.py
"""

import math

from liversim import (
    DONOR,
    DEFAULT_SCORE,
    Indication,
    Item,
    MeldBand,
    PolicyKind,
    Queue,
    RecipientClass,
    choose_match,
    score,
)
from liversim.items import NOT_AWAITING_TIMER

ORGAN = Item(DONOR, math.inf, math.inf, 0.0, NOT_AWAITING_TIMER, 0)

# A small queue in arrival order. Fields: class, remaining real patience,
# remaining predictive patience, waiting time.
lineup = [
    ("long-waiting low-MELD HCC", RecipientClass(Indication.HCC, MeldBand.B1), 4.0, 3.2, 2.5),
    ("sick cirrhotic, just arrived", RecipientClass(Indication.CIRRH, MeldBand.B6), 0.8, 2.6, 0.1),
    ("about to die, prediction blind", RecipientClass(Indication.OTHER, MeldBand.B3), 0.2, 4.0, 1.0),
    ("exception holder", RecipientClass(Indication.MXP, MeldBand.B2), 6.0, 0.6, 0.4),
    ("waiting for an exception", RecipientClass(Indication.CIRRH, MeldBand.B1, True), 9.0, 8.0, 0.7),
]

queue = Queue()
for i, (label, cls, real, pred, wait) in enumerate(lineup):
    timer = 0.5 if cls.awaits_mxp else NOT_AWAITING_TIMER
    queue.append(Item(cls, real, pred, 0.0, timer, i + 1))
    queue.entered[i] -= wait  # stagger waiting times

print("queue (arrival order):")
for i, (label, cls, real, pred, wait) in enumerate(lineup):
    pts = score(DEFAULT_SCORE, cls, wait)
    print(f"  [{i}] {label:32s} {str(cls):24s} real={real:4.1f} pred={pred:4.1f} "
          f"wait={wait:3.1f} score={pts:7.1f}")

print("\nan organ arrives; each policy picks:")
for kind in PolicyKind:
    idx = choose_match(kind, queue, ORGAN)
    label = lineup[idx][0] if idx is not None else "(no one)"
    print(f"  {kind.name:5s} -> [{idx}] {label}")

# EDF sees the truly shortest remaining life; ESDF only sees its simulated
# proxy; SCORE ignores both and follows points. The patient waiting for an
# exception is invisible to all three.
