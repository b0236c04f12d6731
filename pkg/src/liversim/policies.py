"""Matching policies: who gets an incoming organ.

Three disciplines are implemented. EDF (earliest deadline first) picks the
compatible recipient with the least remaining real patience -- an oracle
policy, since real residual lifetimes are unobservable in practice. ESDF
ranks on the simulated (predictive) patience instead. SCORE ranks on an
allocation score computed from the class and waiting time alone, mirroring
the structure of the French liver allocation score: per-band base points, a
per-indication slope on waiting time, and a bonus for exception holders.

Ties break toward the earliest arrival. Policies are pure functions and
consume no randomness, so swapping the policy never perturbs the simulated
arrival or survival streams.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .classes import (
    DONOR,
    CompatibilityGraph,
    DonorClass,
    Indication,
    MeldBand,
    RecipientClass,
    enumerate_classes,
)
from .items import Item, Queue

__all__ = ["PolicyKind", "ScoreFunction", "score", "choose_match", "DEFAULT_SCORE"]


class PolicyKind(enum.Enum):
    EDF = "EDF"
    ESDF = "ESDF"
    SCORE = "SCORE"


@dataclass(frozen=True, eq=False)
class ScoreFunction:
    """Allocation score ``base(band) + slope(indication) * wait + mxp bonus``.

    Depends only on the class and waiting time, never on patience fields.
    """

    base_points: Mapping[MeldBand, float]
    wait_slope: Mapping[Indication, float]
    mxp_bonus: float

    def __post_init__(self) -> None:
        for band in MeldBand:
            if band not in self.base_points:
                raise ValueError(f"missing base points for band {band.label}")
        for ind in Indication:
            if ind not in self.wait_slope:
                raise ValueError(f"missing wait slope for indication {ind.name}")
        # Per-class constant/slope vectors over the canonical class order,
        # for vectorized scoring of a whole queue.
        classes = enumerate_classes()
        const = np.zeros(len(classes))
        slope = np.zeros(len(classes))
        for i, cls in enumerate(classes):
            if isinstance(cls, DonorClass):
                continue
            const[i] = self.base_points[cls.meld]
            if cls.indication is Indication.MXP:
                const[i] += self.mxp_bonus
            slope[i] = self.wait_slope[cls.indication]
        object.__setattr__(self, "_const", const)
        object.__setattr__(self, "_slope", slope)

    def class_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        return self._const, self._slope  # type: ignore[attr-defined]


def default_score_function() -> ScoreFunction:
    """Shipped score parameterization (all overridable in the run config)."""
    bands = list(MeldBand)
    return ScoreFunction(
        base_points=dict(zip(bands, [100.0, 280.0, 460.0, 700.0, 850.0, 1000.0])),
        wait_slope={
            Indication.CIRRH: 0.0,
            Indication.HCC: 300.0,
            Indication.OTHER: 300.0,
            Indication.MXP: 300.0,
        },
        mxp_bonus=725.0,
    )


DEFAULT_SCORE = default_score_function()


def score(fn: ScoreFunction, cls: RecipientClass, waiting_time: float) -> float:
    """Allocation score of one recipient class after ``waiting_time`` years."""
    s = fn.base_points[cls.meld] + fn.wait_slope[cls.indication] * waiting_time
    if cls.indication is Indication.MXP:
        s += fn.mxp_bonus
    return s


def _select_slot(
    kind: PolicyKind,
    queue: Queue,
    candidate: np.ndarray,
    score_const: np.ndarray,
    score_slope: np.ndarray,
) -> int | None:
    """Pick the matched raw slot among candidate slots, or None.

    ``candidate`` is a boolean mask over the first ``queue.n`` slots. First
    occurrence of the extreme value wins, which is the FIFO tie-break since
    slots are kept in arrival order.
    """
    if not candidate.any():
        return None
    n = queue.n
    if kind is PolicyKind.EDF:
        key = np.where(candidate, queue.real_death[:n], np.inf)
        return int(np.argmin(key))
    if kind is PolicyKind.ESDF:
        key = np.where(candidate, queue.pred_death[:n], np.inf)
        return int(np.argmin(key))
    if kind is PolicyKind.SCORE:
        cls = queue.class_idx[:n]
        wait = queue.now - queue.entered[:n]
        key = np.where(candidate, score_const[cls] + score_slope[cls] * wait, -np.inf)
        return int(np.argmax(key))
    raise ValueError(f"unknown policy {kind!r}")


def choose_match(
    kind: PolicyKind,
    queue: Queue,
    incoming: Item,
    graph: CompatibilityGraph | None = None,
    score_fn: ScoreFunction | None = None,
) -> int | None:
    """Index of the recipient matched with an incoming organ, or None.

    The returned index counts live items in arrival order (0-based). Only
    organs trigger matches; passing a recipient raises.
    """
    if not isinstance(incoming.cls, DonorClass):
        raise TypeError(f"only organs trigger matches, got incoming {incoming.cls}")
    if graph is None:
        graph = CompatibilityGraph()
    if score_fn is None:
        score_fn = DEFAULT_SCORE

    n = queue.n
    classes = enumerate_classes()
    compat_by_class = np.array(
        [isinstance(c, RecipientClass) and graph.compatible(DONOR, c) for c in classes]
    )
    candidate = queue.active[:n] & compat_by_class[queue.class_idx[:n]]
    const, slope = score_fn.class_vectors()
    slot = _select_slot(kind, queue, candidate, const, slope)
    if slot is None:
        return None
    return int(np.count_nonzero(queue.active[:slot]))
