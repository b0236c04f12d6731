"""Class space and compatibility structure of the transplant matching queue.

Recipients are characterized by a listing indication, a MELD severity band,
and a flag marking patients who are still waiting for a MELD exception to be
granted. Organs form a single donor class (each simulated system covers one
blood group). An organ can be matched with any recipient except those still
waiting for their exception.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

__all__ = [
    "Indication",
    "MeldBand",
    "RecipientClass",
    "DonorClass",
    "DONOR",
    "ClassId",
    "CompatibilityGraph",
    "MXP_BANDS",
    "AWAITING_INDICATIONS",
    "enumerate_classes",
    "recipient_classes",
    "is_compatible",
    "class_key",
    "parse_class_key",
]


class Indication(enum.IntEnum):
    """Listing indication. The integer order fixes the canonical class order."""

    CIRRH = 0
    HCC = 1
    MXP = 2
    OTHER = 3


class MeldBand(enum.IntEnum):
    """Six MELD severity bands, ordered from least to most severe."""

    B1 = 0
    B2 = 1
    B3 = 2
    B4 = 3
    B5 = 4
    B6 = 5

    @property
    def bounds(self) -> tuple[int, int]:
        return _BAND_BOUNDS[self]

    @property
    def lower(self) -> int:
        return self.bounds[0]

    @property
    def upper(self) -> int:
        return self.bounds[1]

    @property
    def label(self) -> str:
        return f"[{self.lower},{self.upper}]"


_BAND_BOUNDS: dict[MeldBand, tuple[int, int]] = {
    MeldBand.B1: (6, 14),
    MeldBand.B2: (15, 19),
    MeldBand.B3: (20, 25),
    MeldBand.B4: (26, 30),
    MeldBand.B5: (31, 35),
    MeldBand.B6: (36, 40),
}

# Exception patients only exist in the three lowest bands, and only CIRRH and
# OTHER patients can be listed while waiting for an exception.
MXP_BANDS: tuple[MeldBand, ...] = (MeldBand.B1, MeldBand.B2, MeldBand.B3)
AWAITING_INDICATIONS: tuple[Indication, ...] = (Indication.CIRRH, Indication.OTHER)


@dataclass(frozen=True, order=True)
class RecipientClass:
    """One of the 27 recipient classes: (indication, MELD band, awaiting flag)."""

    indication: Indication
    meld: MeldBand
    awaits_mxp: bool = False

    def __post_init__(self) -> None:
        if self.indication is Indication.MXP:
            if self.meld not in MXP_BANDS:
                raise ValueError(f"MXP patients only occupy MELD bands "
                                 f"{[b.label for b in MXP_BANDS]}, got {self.meld.label}")
            if self.awaits_mxp:
                raise ValueError("MXP patients already hold their exception")
        if self.awaits_mxp:
            if self.indication not in AWAITING_INDICATIONS:
                raise ValueError(f"only CIRRH and OTHER patients can wait for a "
                                 f"MELD exception, got {self.indication.name}")
            if self.meld not in MXP_BANDS:
                raise ValueError(f"patients waiting for a MELD exception must be in "
                                 f"bands {[b.label for b in MXP_BANDS]}, got {self.meld.label}")

    def __str__(self) -> str:
        suffix = "+awaiting" if self.awaits_mxp else ""
        return f"{self.indication.name}/{self.meld.label}{suffix}"


@dataclass(frozen=True)
class DonorClass:
    """The single organ class."""

    def __str__(self) -> str:
        return "DONOR"


DONOR = DonorClass()

ClassId = DonorClass | RecipientClass

_RECIPIENTS: tuple[RecipientClass, ...] | None = None
_ALL: tuple[ClassId, ...] | None = None


def recipient_classes() -> tuple[RecipientClass, ...]:
    """All 27 recipient classes in canonical order.

    Canonical order: indication (CIRRH < HCC < MXP < OTHER), then MELD band
    ascending, then awaiting flag (false < true).
    """
    global _RECIPIENTS
    if _RECIPIENTS is None:
        out = []
        for ind in Indication:
            for band in MeldBand:
                if ind is Indication.MXP and band not in MXP_BANDS:
                    continue
                out.append(RecipientClass(ind, band, False))
                if ind in AWAITING_INDICATIONS and band in MXP_BANDS:
                    out.append(RecipientClass(ind, band, True))
        _RECIPIENTS = tuple(out)
    return _RECIPIENTS


def enumerate_classes() -> tuple[ClassId, ...]:
    """All 28 classes: the donor class first, then recipients in canonical order."""
    global _ALL
    if _ALL is None:
        _ALL = (DONOR,) + recipient_classes()
    return _ALL


def is_compatible(donor: ClassId, recipient: RecipientClass) -> bool:
    """Whether an incoming organ can be matched with a queued recipient.

    Every recipient is compatible except those still waiting for a MELD
    exception.
    """
    if not isinstance(donor, DonorClass):
        raise TypeError(f"first argument must be the donor class, got {donor!r}")
    if not isinstance(recipient, RecipientClass):
        raise TypeError(f"second argument must be a recipient class, got {recipient!r}")
    return not recipient.awaits_mxp


@dataclass(frozen=True, eq=False)
class CompatibilityGraph:
    """Bipartite donor-recipient compatibility: every non-awaiting recipient.

    The edge set is fixed by the model (one donor class, compatible with all
    recipients except those waiting for a MELD exception); the default
    constructor builds exactly that set.
    """

    edges: frozenset[tuple[DonorClass, RecipientClass]] = field(default_factory=lambda: frozenset(
        (DONOR, r) for r in recipient_classes() if not r.awaits_mxp))

    def compatible(self, donor: ClassId, recipient: RecipientClass) -> bool:
        if not isinstance(donor, DonorClass):
            raise TypeError(f"first argument must be the donor class, got {donor!r}")
        return (donor, recipient) in self.edges


def class_key(cls: ClassId) -> str:
    """Stable text key for a class, used in config files and CSV headers."""
    if isinstance(cls, DonorClass):
        return "DONOR"
    key = f"{cls.indication.name}.{cls.meld.name}"
    if cls.awaits_mxp:
        key += ".awaiting"
    return key


def parse_class_key(key: str) -> ClassId:
    """Inverse of :func:`class_key`."""
    if key == "DONOR":
        return DONOR
    parts = key.split(".")
    if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] != "awaiting"):
        raise ValueError(f"malformed class key: {key!r}")
    try:
        ind = Indication[parts[0]]
        band = MeldBand[parts[1]]
    except KeyError as exc:
        raise ValueError(f"malformed class key: {key!r}") from exc
    return RecipientClass(ind, band, len(parts) == 3)
