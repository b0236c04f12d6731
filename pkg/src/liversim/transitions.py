"""MELD-band transition structure between recipient classes.

Queued patients (other than exception holders and patients waiting for one)
move between MELD bands at a configurable mean pace. A transition picks a
direction -- deterioration toward higher bands is more likely than
improvement -- and then a destination band weighted by the arrival rates of
the destination classes. Exception grants (awaiting -> MXP, same band) form
a separate edge set whose timing comes from the grant-time model, not from
these rates; they are the only transitions that reset the waiting time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .classes import (
    Indication,
    MeldBand,
    RecipientClass,
    recipient_classes,
)

__all__ = [
    "TransitionGraph",
    "build_transition_rates",
    "meld_neighbors",
    "DEFAULT_P_UP",
    "DEFAULT_MEAN_CHANGE_YEARS",
]

Edge = tuple[RecipientClass, RecipientClass]

# Given that a MELD change happens, probability it is a deterioration
# (higher band), when both directions are available.
DEFAULT_P_UP = 2.0 / 3.0
# Mean years between MELD-band changes for an eligible patient.
DEFAULT_MEAN_CHANGE_YEARS = 2.0


def is_meld_mobile(cls: RecipientClass) -> bool:
    """Whether a class undergoes MELD-band transitions."""
    return cls.indication is not Indication.MXP and not cls.awaits_mxp


def meld_neighbors(cls: RecipientClass) -> tuple[list[RecipientClass], list[RecipientClass]]:
    """Up (higher-band) and down (lower-band) destination sets for a class.

    Both sets are empty for exception holders and awaiting patients, which
    never change MELD band.
    """
    if not is_meld_mobile(cls):
        return [], []
    ups, downs = [], []
    for band in MeldBand:
        if band == cls.meld:
            continue
        dest = RecipientClass(cls.indication, band, False)
        (ups if band > cls.meld else downs).append(dest)
    return ups, downs


@dataclass(frozen=True)
class TransitionGraph:
    """Continuous-time transition rates plus the exception-grant edge set.

    ``meld_rates`` holds one rate per MELD-band edge (per year). The grant
    edges carry no rate here: grant times are drawn from the grant-time
    model when the patient arrives.
    """

    meld_rates: Mapping[Edge, float]
    grant_edges: frozenset[Edge]
    p_up: float
    mean_change_years: float

    def rate(self, src: RecipientClass, dst: RecipientClass) -> float:
        return self.meld_rates.get((src, dst), 0.0)

    def outflow(self, src: RecipientClass) -> float:
        """Total MELD-transition rate out of a class."""
        return sum(r for (i, _), r in self.meld_rates.items() if i == src)

    def destinations(self, src: RecipientClass) -> list[tuple[RecipientClass, float]]:
        return [(j, r) for (i, j), r in self.meld_rates.items() if i == src]


def build_transition_rates(
    arrival_rates: Mapping[RecipientClass, float],
    mean_meld_change_time: float = DEFAULT_MEAN_CHANGE_YEARS,
    p_up: float = DEFAULT_P_UP,
) -> TransitionGraph:
    """Derive MELD-transition rates from class arrival rates.

    Each eligible class leaves at total rate ``1 / mean_meld_change_time``.
    When both directions are available the outflow splits ``p_up`` toward
    higher bands and ``1 - p_up`` toward lower bands; a boundary band sends
    the whole outflow in its only available direction. Within a direction,
    destination bands are weighted by their arrival rates.

    Raises ``ValueError`` if a needed destination weight is missing,
    negative, or if a direction's weights sum to zero.
    """
    if mean_meld_change_time <= 0:
        raise ValueError("mean_meld_change_time must be positive")
    if not 0.0 <= p_up <= 1.0:
        raise ValueError("p_up must lie in [0, 1]")
    total = 1.0 / mean_meld_change_time

    rates: dict[Edge, float] = {}
    for src in recipient_classes():
        ups, downs = meld_neighbors(src)
        if not ups and not downs:
            continue
        if not downs:
            shares = [(ups, 1.0)]
        elif not ups:
            shares = [(downs, 1.0)]
        else:
            shares = [(ups, p_up), (downs, 1.0 - p_up)]
        for dests, share in shares:
            weights = []
            for dst in dests:
                w = arrival_rates.get(dst)
                if w is None:
                    raise ValueError(f"no arrival rate configured for {dst}")
                if w < 0:
                    raise ValueError(f"negative arrival rate for {dst}")
                weights.append(w)
            norm = sum(weights)
            if norm <= 0.0:
                raise ValueError(
                    f"arrival rates of the destinations of {src} sum to zero; "
                    "cannot normalize transition rates")
            for dst, w in zip(dests, weights):
                rates[(src, dst)] = total * share * w / norm

    grants = frozenset(
        (cls, RecipientClass(Indication.MXP, cls.meld, False))
        for cls in recipient_classes()
        if cls.awaits_mxp
    )
    return TransitionGraph(
        meld_rates=rates,
        grant_edges=grants,
        p_up=p_up,
        mean_change_years=mean_meld_change_time,
    )
