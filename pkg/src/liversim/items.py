"""Queued items and the arrival-ordered waiting queue.

An :class:`Item` is the contract-level view of one queued patient (or an
incoming organ): remaining real and predictive patience, waiting time, the
exception timer, and a signed identity tag (negative ids mark items carried
over from the warm-up phase).

The :class:`Queue` stores recipients in arrival order as growable numpy
columns. Clocks are kept on an absolute time axis (expiry instants rather
than remaining durations) so that aging one step costs nothing; removals
tombstone a slot and the arrays are compacted, order-preserving, once enough
slots are dead. Organs are never stored: an organ either matches on arrival
or is discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classes import ClassId, DonorClass, Indication, RecipientClass, enumerate_classes

__all__ = ["Item", "Queue", "NOT_AWAITING_TIMER"]

# Exception-timer sentinel for items that are not waiting for a grant.
# Any value <= -1 means "not awaiting"; values in (-1, 0] mean "grant now";
# positive values are the remaining delay until the grant.
NOT_AWAITING_TIMER = -2.0


@dataclass(frozen=True)
class Item:
    """One patient or organ, as tracked by the simulation.

    Patience fields are remaining durations in years (``inf`` for organs,
    which carry no patience clock). ``mxp_timer`` follows the sentinel
    convention above. ``waiting_time`` is the time since arrival, reset to
    zero when a MELD exception is granted.
    """

    cls: ClassId
    real_patience: float
    predictive_patience: float
    waiting_time: float
    mxp_timer: float
    id: int

    def __post_init__(self) -> None:
        if self.waiting_time < 0:
            raise ValueError("waiting_time must be nonnegative")
        if isinstance(self.cls, DonorClass):
            if not (math.isinf(self.real_patience) and math.isinf(self.predictive_patience)):
                raise ValueError("organs carry no patience clocks")
        elif self.cls.awaits_mxp and self.mxp_timer <= -1:
            raise ValueError("awaiting patients need a live exception timer")

    @property
    def awaits_mxp(self) -> bool:
        return isinstance(self.cls, RecipientClass) and self.cls.awaits_mxp


class Queue:
    """Arrival-ordered recipient queue on growable numpy columns.

    ``now`` is the queue's clock (years). Internally each item stores its
    real/predictive patience expiry instants (``now + remaining``), its entry
    instant (``entered``, reset on exception grant -- this is the clock that
    waiting time and all conditional redraws run on), its arrival instant
    (``arrived``, never reset, used for reporting), and the absolute grant
    instant (``grant_at``, ``+inf`` when not awaiting).
    """

    __slots__ = (
        "now", "n", "_cap",
        "class_idx", "real_death", "pred_death", "entered", "arrived",
        "grant_at", "ids", "active", "awaits", "mobile",
    )

    def __init__(self, capacity: int = 256, now: float = 0.0) -> None:
        self.now = float(now)
        self.n = 0
        self._cap = int(capacity)
        self.class_idx = np.zeros(capacity, dtype=np.int16)
        self.real_death = np.zeros(capacity, dtype=np.float64)
        self.pred_death = np.zeros(capacity, dtype=np.float64)
        self.entered = np.zeros(capacity, dtype=np.float64)
        self.arrived = np.zeros(capacity, dtype=np.float64)
        self.grant_at = np.zeros(capacity, dtype=np.float64)
        self.ids = np.zeros(capacity, dtype=np.int64)
        self.active = np.zeros(capacity, dtype=bool)
        self.awaits = np.zeros(capacity, dtype=bool)
        # MELD-mobile: eligible for band transitions (not MXP, not awaiting).
        self.mobile = np.zeros(capacity, dtype=bool)

    _COLUMNS = ("class_idx", "real_death", "pred_death", "entered", "arrived",
                "grant_at", "ids", "active", "awaits", "mobile")

    def __len__(self) -> int:
        return int(np.count_nonzero(self.active[: self.n]))

    def _grow(self) -> None:
        new_cap = self._cap * 2
        for name in self._COLUMNS:
            col = getattr(self, name)
            grown = np.zeros(new_cap, dtype=col.dtype)
            grown[: self.n] = col[: self.n]
            setattr(self, name, grown)
        self._cap = new_cap

    def compact(self, min_dead: int | None = None) -> None:
        """Drop tombstoned slots, order-preserving, once enough have died.

        With ``min_dead=0`` the queue compacts whenever any slot is dead.
        """
        dead = self.n - int(np.count_nonzero(self.active[: self.n]))
        if min_dead is None:
            min_dead = max(256, self.n // 3)
        if dead <= min_dead:
            return
        keep = self.active[: self.n].copy()  # the loop overwrites the active column
        m = int(np.count_nonzero(keep))
        for name in self._COLUMNS:
            col = getattr(self, name)
            col[:m] = col[: self.n][keep]
            setattr(self, name, col)
        self.n = m

    def append_slot(
        self,
        class_idx: int,
        real_death: float,
        pred_death: float,
        grant_at: float,
        item_id: int,
        awaits: bool,
        mobile: bool,
    ) -> int:
        """Append a recipient with precomputed absolute clocks; returns the slot."""
        if self.n == self._cap:
            self._grow()
        i = self.n
        self.class_idx[i] = class_idx
        self.real_death[i] = real_death
        self.pred_death[i] = pred_death
        self.entered[i] = self.now
        self.arrived[i] = self.now
        self.grant_at[i] = grant_at
        self.ids[i] = item_id
        self.active[i] = True
        self.awaits[i] = awaits
        self.mobile[i] = mobile
        self.n += 1
        return i

    def append(self, item: Item) -> int:
        """Append a recipient :class:`Item` (remaining-duration view) at the tail."""
        cls = item.cls
        if not isinstance(cls, RecipientClass):
            raise TypeError("only recipients are stored; organs match or are discarded")
        classes = enumerate_classes()
        grant_at = self.now + item.mxp_timer if cls.awaits_mxp else math.inf
        return self.append_slot(
            class_idx=classes.index(cls),
            real_death=self.now + item.real_patience,
            pred_death=self.now + item.predictive_patience,
            grant_at=grant_at,
            item_id=item.id,
            awaits=cls.awaits_mxp,
            mobile=not cls.awaits_mxp and cls.indication is not Indication.MXP,
        )

    def live_slots(self) -> np.ndarray:
        """Raw slot indices of live items, in arrival order."""
        return np.nonzero(self.active[: self.n])[0]

    def item_at_slot(self, slot: int) -> Item:
        """Contract-level view of one live slot, with remaining durations."""
        if not self.active[slot]:
            raise IndexError(f"slot {slot} is not live")
        classes = enumerate_classes()
        cls = classes[int(self.class_idx[slot])]
        if self.awaits[slot]:
            timer = float(self.grant_at[slot] - self.now)
        else:
            timer = NOT_AWAITING_TIMER
        return Item(
            cls=cls,
            real_patience=float(self.real_death[slot] - self.now),
            predictive_patience=float(self.pred_death[slot] - self.now),
            waiting_time=float(self.now - self.entered[slot]),
            mxp_timer=timer,
            id=int(self.ids[slot]),
        )

    def items(self) -> list[Item]:
        """All live items in arrival order (contract view)."""
        return [self.item_at_slot(int(s)) for s in self.live_slots()]

    def waiting_times(self) -> np.ndarray:
        """Waiting time of every slot (junk in dead slots)."""
        return self.now - self.entered[: self.n]

    def copy(self) -> "Queue":
        """Deep copy (used to reuse one warm-up across study scenarios)."""
        q = Queue.__new__(Queue)
        q.now = self.now
        q.n = self.n
        q._cap = self._cap
        for name in self._COLUMNS:
            setattr(q, name, getattr(self, name).copy())
        return q
