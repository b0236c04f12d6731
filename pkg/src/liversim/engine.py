"""Discrete-time simulation loop.

One item arrives per step (its class drawn from the configured arrival law),
the whole queue is then actualized -- aging, deaths, predictive-patience
redraws, exception grants, MELD-band moves -- and finally the arrival is
resolved: an organ is matched under the active policy or discarded, a
patient joins the tail of the queue.

Randomness is split over two streams per replication: the *arrival* stream
covers the incoming draw (class, organ-suppression coin, awaiting flag,
grant delay, patience at arrival) and the *dynamics* stream covers
everything that happens inside the queue. Matching consumes no randomness.
Consequently two runs that differ only in policy or only in the organ
shortage level see bit-identical patient arrivals and at-arrival patience
draws, which makes cross-scenario comparisons common-random-number paired.

A run is reproducible to the byte from (config, master seed): stream
``r`` of a replication is ``SeedSequence(master_seed, spawn_key=(r,)).spawn(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classes import (
    DONOR,
    CompatibilityGraph,
    Indication,
    MeldBand,
    RecipientClass,
    class_key,
    enumerate_classes,
)
from .config import RunConfig
from .items import NOT_AWAITING_TIMER, Item, Queue
from .policies import PolicyKind, ScoreFunction, _select_slot
from .survival import (
    CoxModel,
    CoxStratum,
    EmpiricalLaw,
    MxpGrantModel,
    SurvivalModel,
    WeibullHazard,
    cox_quantile_above,
    empirical_quantile,
    empirical_quantile_above,
)
from .transitions import build_transition_rates

__all__ = [
    "SimulationModel",
    "build_model",
    "Streams",
    "StepEvents",
    "PhaseTallies",
    "FateLedger",
    "FateRecord",
    "SimState",
    "OUTCOME_ALIVE",
    "OUTCOME_LTX",
    "OUTCOME_DDTS",
    "incoming",
    "actualize",
    "grant_mxp",
    "maybe_remeld",
    "step",
    "run_phase",
]

OUTCOME_ALIVE = 0
OUTCOME_LTX = 1
OUTCOME_DDTS = 2
OUTCOME_NAMES = {OUTCOME_ALIVE: "alive", OUTCOME_LTX: "LTx", OUTCOME_DDTS: "DDTS"}


class SimulationModel:
    """Resolved engine configuration: per-class tables for the hot loop.

    Built once from a :class:`RunConfig`; immutable afterwards and safe to
    share across concurrently running replications.
    """

    def __init__(self, cfg: RunConfig) -> None:
        classes = enumerate_classes()
        self.classes = classes
        self.class_index = {c: i for i, c in enumerate(classes)}
        self.n_classes = len(classes)
        self.donor_idx = self.class_index[DONOR]

        self.steps_per_year = cfg.resolved_steps_per_year
        self.dt = 1.0 / self.steps_per_year
        self.initiation_years = cfg.initiation_years
        self.study_years = cfg.study_years
        self.incident_window_years = cfg.incident_window_years
        self.meld_rate = 1.0 / cfg.mean_meld_change_years
        self.p_meld = 1.0 - math.exp(-self.meld_rate / self.steps_per_year)
        self.p_up = cfg.p_up

        # Class structure flags.
        self.awaits_flag = np.array(
            [isinstance(c, RecipientClass) and c.awaits_mxp for c in classes])
        self.is_mxp = np.array(
            [isinstance(c, RecipientClass) and c.indication is Indication.MXP
             for c in classes])
        self.mobile_flag = np.array(
            [isinstance(c, RecipientClass) and not c.awaits_mxp
             and c.indication is not Indication.MXP for c in classes])
        self.indication_idx = np.array(
            [c.indication if isinstance(c, RecipientClass) else -1 for c in classes],
            dtype=np.int8)
        self.band_idx = np.array(
            [c.meld if isinstance(c, RecipientClass) else -1 for c in classes],
            dtype=np.int8)

        # Awaiting row <-> exception row plumbing.
        self.mxp_target = np.full(self.n_classes, -1, dtype=np.int16)
        self.await_variant = np.full(self.n_classes, -1, dtype=np.int16)
        for i, c in enumerate(classes):
            if isinstance(c, RecipientClass) and c.awaits_mxp:
                self.mxp_target[i] = self.class_index[
                    RecipientClass(Indication.MXP, c.meld, False)]
                base = self.class_index[RecipientClass(c.indication, c.meld, False)]
                self.await_variant[base] = i

        # Arrival law: mass on the donor class and ordinary recipient classes;
        # the awaiting flag is a secondary draw folded out of the class counts.
        counts = {k: float(v) for k, v in cfg.arrival_counts.items()}
        mass = np.zeros(self.n_classes)
        self.p_awaits = np.zeros(self.n_classes)
        mass[self.donor_idx] = counts.get("DONOR", 0.0)
        for i, c in enumerate(classes):
            if not isinstance(c, RecipientClass) or c.awaits_mxp:
                continue
            if c.indication is Indication.MXP:
                continue  # exception holders never arrive directly
            own = counts.get(class_key(c), 0.0)
            awaiting = 0.0
            j = self.await_variant[i]
            if j >= 0:
                awaiting = counts.get(class_key(classes[j]), 0.0)
            mass[i] = own + awaiting
            if mass[i] > 0:
                self.p_awaits[i] = awaiting / mass[i]
        total = mass.sum()
        self.arrival_probs = mass / total
        self.arrival_cdf = np.cumsum(self.arrival_probs)
        self.donor_prob = float(self.arrival_probs[self.donor_idx])

        # Patience law tables. Awaiting rows carry the law of their underlying
        # (indication, band) class: their patience is drawn from it conditioned
        # above the grant delay.
        self.real_sigma = np.ones(self.n_classes)
        self.real_shape = np.ones(self.n_classes)
        self.real_inv_hr = np.ones(self.n_classes)  # exp(-log_hr)
        self.pred_is_empirical = np.zeros(self.n_classes, dtype=bool)
        for i, c in enumerate(classes):
            if not isinstance(c, RecipientClass):
                continue
            stratum = cfg.patience[c.indication.name]
            self.real_sigma[i] = stratum["sigma"]
            self.real_shape[i] = stratum["shape"]
            self.real_inv_hr[i] = math.exp(-stratum["log_hr"][c.meld])
            self.pred_is_empirical[i] = c.indication is Indication.MXP

        self.emp_times = np.asarray(cfg.mxp_predictive["times"], dtype=float)
        self.emp_surv = np.asarray(cfg.mxp_predictive["survival"], dtype=float)
        self.emp_grid = float(self.emp_times[1] - self.emp_times[0])

        self.grant_sigma = np.full(self.n_classes, np.nan)
        self.grant_shape = np.full(self.n_classes, np.nan)
        self.grant_inv_hr = np.full(self.n_classes, np.nan)
        for i, c in enumerate(classes):
            if isinstance(c, RecipientClass) and c.awaits_mxp:
                stratum = cfg.grant[c.indication.name]
                self.grant_sigma[i] = stratum["sigma"]
                self.grant_shape[i] = stratum["shape"]
                self.grant_inv_hr[i] = math.exp(-stratum["log_hr"][c.meld])

        # Score table.
        bands = list(MeldBand)
        self.score_fn = ScoreFunction(
            base_points=dict(zip(bands, cfg.score["base_points"])),
            wait_slope={Indication[k]: float(v)
                        for k, v in cfg.score["wait_slope"].items()},
            mxp_bonus=float(cfg.score["mxp_bonus"]),
        )
        self.score_const, self.score_slope = self.score_fn.class_vectors()

        # MELD transition structure. Destination weights are the per-band
        # arrival masses (awaiting arrivals counted with their band).
        folded = {}
        for i, c in enumerate(classes):
            if isinstance(c, RecipientClass) and not c.awaits_mxp \
                    and c.indication is not Indication.MXP:
                folded[c] = float(mass[i])
        self.transitions = build_transition_rates(
            folded, cfg.mean_meld_change_years, cfg.p_up)
        self.up_dest: list[np.ndarray] = [np.empty(0, np.int16)] * self.n_classes
        self.up_cdf: list[np.ndarray] = [np.empty(0)] * self.n_classes
        self.down_dest: list[np.ndarray] = [np.empty(0, np.int16)] * self.n_classes
        self.down_cdf: list[np.ndarray] = [np.empty(0)] * self.n_classes
        for i, c in enumerate(classes):
            if not self.mobile_flag[i]:
                continue
            ups, downs = [], []
            for (src, dst), rate in self.transitions.meld_rates.items():
                if src == c:
                    (ups if dst.meld > c.meld else downs).append((dst, rate))
            for dests, attr_d, attr_c in ((ups, "up_dest", "up_cdf"),
                                          (downs, "down_dest", "down_cdf")):
                if not dests:
                    continue
                dests.sort(key=lambda dr: dr[0].meld)
                idx = np.array([self.class_index[d] for d, _ in dests], np.int16)
                w = np.array([r for _, r in dests])
                getattr(self, attr_d)[i] = idx
                getattr(self, attr_c)[i] = np.cumsum(w) / w.sum()

        # Contract-level model objects (single source of parameters is cfg,
        # so these agree with the tables above).
        self.survival = SurvivalModel(
            patience=CoxModel({
                Indication[name]: CoxStratum(
                    WeibullHazard(s["sigma"], s["shape"]), tuple(s["log_hr"]))
                for name, s in cfg.patience.items()}),
            mxp_predictive=EmpiricalLaw(tuple(self.emp_times), tuple(self.emp_surv)),
            grant=MxpGrantModel({
                Indication[name]: CoxStratum(
                    WeibullHazard(s["sigma"], s["shape"]), tuple(s["log_hr"]))
                for name, s in cfg.grant.items()}),
        )
        self.compat = CompatibilityGraph()


def build_model(cfg: RunConfig) -> SimulationModel:
    """Resolve a run configuration into the simulation tables."""
    return SimulationModel(cfg)


@dataclass
class Streams:
    """The two random streams of one replication."""

    arrival: np.random.Generator
    dynamics: np.random.Generator

    @classmethod
    def for_replication(cls, master_seed: int, replication: int) -> "Streams":
        children = np.random.SeedSequence(
            master_seed, spawn_key=(replication,)).spawn(2)
        return cls(np.random.default_rng(children[0]),
                   np.random.default_rng(children[1]))

    def snapshot(self) -> tuple:
        return (self.arrival.bit_generator.state, self.dynamics.bit_generator.state)

    @classmethod
    def from_snapshot(cls, snap: tuple) -> "Streams":
        arr, dyn = np.random.default_rng(), np.random.default_rng()
        arr.bit_generator.state = snap[0]
        dyn.bit_generator.state = snap[1]
        return cls(arr, dyn)


@dataclass
class StepEvents:
    """What happened during one step; id sets are disjoint within a step."""

    reneged: list[int] = field(default_factory=list)
    redrawn: list[int] = field(default_factory=list)
    granted: list[tuple[int, int]] = field(default_factory=list)   # (id, new class idx)
    transitions: list[tuple[int, int, int]] = field(default_factory=list)  # (id, from, to)
    transplants: list[tuple[int, int]] = field(default_factory=list)  # (donor id, recipient id)
    discarded: list[int] = field(default_factory=list)


@dataclass
class PhaseTallies:
    """Flow counters for the bookkeeping identity, asserted at phase end."""

    initial_queue_size: int = 0
    recipients_enqueued: int = 0
    donors_arrived: int = 0
    donors_suppressed: int = 0
    transplants: int = 0
    reneged: int = 0
    discarded: int = 0
    grants: int = 0
    meld_transitions: int = 0
    predictive_redraws: int = 0
    still_waiting: int = 0

    def check_conservation(self, still_waiting: int) -> None:
        lhs = self.initial_queue_size + self.recipients_enqueued
        rhs = self.transplants + self.reneged + still_waiting
        if lhs != rhs:
            raise RuntimeError(
                f"recipient conservation violated: {lhs} entered vs {rhs} accounted")
        if self.donors_arrived != self.transplants + self.discarded:
            raise RuntimeError(
                f"organ conservation violated: {self.donors_arrived} arrived vs "
                f"{self.transplants} transplanted + {self.discarded} discarded")


@dataclass(frozen=True)
class FateRecord:
    """Contract view of one recipient's study-phase fate."""

    id: int
    initial_class: RecipientClass
    outcome: str            # "LTx", "DDTS" or "alive"
    time_in_system: float
    incident: bool
    prevalent: bool


class FateLedger:
    """Per-recipient outcomes of a recorded phase, as aligned arrays."""

    def __init__(self, ids, class_idx, entry, exit_, outcome, model: SimulationModel,
                 incident_window: float, tallies: PhaseTallies) -> None:
        self.ids = np.asarray(ids, dtype=np.int64)
        self.class_idx = np.asarray(class_idx, dtype=np.int16)
        self.entry = np.asarray(entry, dtype=float)
        self.exit = np.asarray(exit_, dtype=float)
        self.outcome = np.asarray(outcome, dtype=np.int8)
        self.indication = model.indication_idx[self.class_idx]
        self.band = model.band_idx[self.class_idx]
        self.prevalent = self.ids < 0
        self.incident = (~self.prevalent) & (self.entry < incident_window)
        self.incident_window = incident_window
        self.tallies = tallies
        self._classes = model.classes

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def time_in_system(self) -> np.ndarray:
        return self.exit - self.entry

    def records(self) -> list[FateRecord]:
        return [
            FateRecord(
                id=int(self.ids[i]),
                initial_class=self._classes[int(self.class_idx[i])],
                outcome=OUTCOME_NAMES[int(self.outcome[i])],
                time_in_system=float(self.exit[i] - self.entry[i]),
                incident=bool(self.incident[i]),
                prevalent=bool(self.prevalent[i]),
            )
            for i in range(len(self.ids))
        ]


class _LedgerBuilder:
    __slots__ = ("ids", "class_idx", "entry", "exit", "outcome", "pos")

    def __init__(self) -> None:
        self.ids: list[int] = []
        self.class_idx: list[int] = []
        self.entry: list[float] = []
        self.exit: list[float] = []
        self.outcome: list[int] = []
        self.pos: dict[int, int] = {}

    def add(self, item_id: int, class_idx: int, entry_t: float) -> None:
        self.pos[item_id] = len(self.ids)
        self.ids.append(item_id)
        self.class_idx.append(class_idx)
        self.entry.append(entry_t)
        self.exit.append(math.nan)
        self.outcome.append(OUTCOME_ALIVE)

    def set_class(self, item_id: int, class_idx: int) -> None:
        self.class_idx[self.pos[item_id]] = class_idx

    def close(self, item_id: int, outcome: int, exit_t: float) -> None:
        i = self.pos[item_id]
        self.outcome[i] = outcome
        self.exit[i] = exit_t

    def finalize(self, duration: float, model: SimulationModel,
                 incident_window: float, tallies: PhaseTallies) -> FateLedger:
        exit_ = [duration if math.isnan(x) else x for x in self.exit]
        return FateLedger(self.ids, self.class_idx, self.entry, exit_,
                          self.outcome, model, incident_window, tallies)


@dataclass
class SimState:
    """Mutable state threaded through the per-step dynamics."""

    queue: Queue
    shortage: float = 0.0
    warming: bool = False          # warm-up items get negative (prevalent) ids
    next_id: int = 1
    phase_start: float = 0.0
    tallies: PhaseTallies = field(default_factory=PhaseTallies)
    ledger: _LedgerBuilder | None = None

    def alloc_id(self) -> int:
        i = self.next_id
        self.next_id += 1
        return -i if self.warming else i


# ---------------------------------------------------------------------------
# Arrival


def _draw_arrival(model: SimulationModel, rng: np.random.Generator,
                  shortage: float, item_id: int):
    """Raw arrival tuple, or the donor sentinel, or None when suppressed.

    Returns ``("donor", item_id)`` for an organ, ``None`` for a suppressed
    organ, else ``(class_idx, grant_delay, real, pred, item_id)`` with
    patience as remaining durations. The suppression coin is tossed for
    every organ regardless of the shortage level, and the id is allocated
    before suppression, so arrival streams line up across shortage levels.
    """
    k = int(np.searchsorted(model.arrival_cdf, rng.random(), side="right"))
    if k == model.donor_idx:
        if rng.random() < shortage:
            return None
        return ("donor", item_id)
    if model.p_awaits[k] > 0.0 and rng.random() < model.p_awaits[k]:
        k = int(model.await_variant[k])
        grant_delay = _grant_root(model, k, rng.random())
        # patience conditioned to outlast the grant
        real = _cox_above(model, k, grant_delay, rng.random())
        pred = _cox_above(model, k, grant_delay, rng.random())
        return (k, grant_delay, real, pred, item_id)
    real = _cox_root(model, k, rng.random())
    pred = _cox_root(model, k, rng.random())
    return (k, math.inf, real, pred, item_id)


def _cox_root(model: SimulationModel, k: int, u: float) -> float:
    return model.real_sigma[k] * (-math.log(u) * model.real_inv_hr[k]) ** (1.0 / model.real_shape[k])


def _grant_root(model: SimulationModel, k: int, u: float) -> float:
    return model.grant_sigma[k] * (-math.log(u) * model.grant_inv_hr[k]) ** (1.0 / model.grant_shape[k])


def _cox_above(model: SimulationModel, k: int, floor: float, u: float) -> float:
    y = (floor / model.real_sigma[k]) ** model.real_shape[k] \
        - math.log(u) * model.real_inv_hr[k]
    return model.real_sigma[k] * y ** (1.0 / model.real_shape[k])


def incoming(model: SimulationModel, rng: np.random.Generator,
             shortage: float = 0.0, item_id: int = 1) -> Item | None:
    """Draw the item arriving this step; None when the organ is suppressed.

    Patients get their class (with the awaiting flag drawn where relevant),
    the grant delay if awaiting, and real/predictive patience (conditioned
    to outlast the grant for awaiting patients). Waiting time starts at 0.
    """
    raw = _draw_arrival(model, rng, shortage, item_id)
    if raw is None:
        return None
    if raw[0] == "donor":
        return Item(DONOR, math.inf, math.inf, 0.0, NOT_AWAITING_TIMER, raw[1])
    k, grant_delay, real, pred, iid = raw
    cls = model.classes[k]
    timer = grant_delay if cls.awaits_mxp else NOT_AWAITING_TIMER
    return Item(cls, real, pred, 0.0, timer, iid)


# ---------------------------------------------------------------------------
# Queue actualization


def _grant_redraw(model: SimulationModel, mxp_k: int, c: float,
                  rng: np.random.Generator) -> tuple[float, float]:
    """Patience redraws at an exception grant after ``c`` years in line.

    Real patience: the exception class's law conditioned above ``c``,
    shifted back to a residual. Predictive patience: the empirical law,
    unconditioned.
    """
    u_real = rng.random()
    real = _cox_above(model, mxp_k, c, u_real) - c
    u_pred = rng.random()
    pred = float(empirical_quantile(model.emp_times, model.emp_surv, u_pred))
    return real, pred


def _transition_redraw(model: SimulationModel, dest_k: int, c: float,
                       rng: np.random.Generator) -> tuple[float, float]:
    """Patience redraws after a MELD move: destination law given >= c, shifted."""
    real = _cox_above(model, dest_k, c, rng.random()) - c
    pred = _cox_above(model, dest_k, c, rng.random()) - c
    return real, pred


def _meld_destination(model: SimulationModel, k: int,
                      rng: np.random.Generator) -> int:
    """Destination class of a MELD move out of class ``k``.

    Deterioration wins with probability ``p_up`` when both directions exist;
    boundary bands move in their only direction. The direction coin is only
    tossed when there is a choice; the destination draw always happens.
    """
    ups, downs = model.up_dest[k], model.down_dest[k]
    if len(ups) and len(downs):
        go_up = rng.random() < model.p_up
    else:
        go_up = bool(len(ups))
    dest, cdf = (ups, model.up_cdf[k]) if go_up else (downs, model.down_cdf[k])
    return int(dest[int(np.searchsorted(cdf, rng.random(), side="right"))])


def actualize(queue: Queue, model: SimulationModel,
              rng: np.random.Generator, events: StepEvents | None = None) -> StepEvents:
    """Advance the queue clock one step and update every stored item.

    Per item, in order: age (waiting up, patience and grant timer down);
    death when real patience has run out; redraw of an elapsed predictive
    patience from the class law conditioned on the time already spent,
    shifted; exception grant when the timer has run out; MELD move with
    per-step probability ``p_meld``. The queue is mutated in place; the
    relative order of surviving items never changes.
    """
    if events is None:
        events = StepEvents()
    queue.now = t = queue.now + model.dt
    n = queue.n
    if n == 0:
        return events
    active = queue.active[:n]
    ids = queue.ids[:n]

    # deaths
    ren = active & (queue.real_death[:n] < t)
    if ren.any():
        idx = np.nonzero(ren)[0]
        queue.active[idx] = False
        events.reneged.extend(int(i) for i in ids[idx])

    # elapsed predictive patience: redraw conditioned on time spent, shifted.
    # Awaiting patients are skipped: their predictive clock cannot elapse
    # before the grant, which redraws it anyway.
    red = active & ~queue.awaits[:n] & (queue.pred_death[:n] < t)
    if red.any():
        idx = np.nonzero(red)[0]
        cls = queue.class_idx[idx]
        c = t - queue.entered[idx]
        u = rng.random(len(idx))
        resid = np.empty(len(idx))
        emp = model.pred_is_empirical[cls]
        if emp.any():
            resid[emp] = empirical_quantile_above(
                model.emp_times, model.emp_surv, model.emp_grid,
                c[emp], u[emp]) - c[emp]
        cox = ~emp
        if cox.any():
            resid[cox] = cox_quantile_above(
                model.real_sigma[cls[cox]], model.real_shape[cls[cox]],
                -np.log(model.real_inv_hr[cls[cox]]), c[cox], u[cox]) - c[cox]
        queue.pred_death[idx] = t + resid
        events.redrawn.extend(int(i) for i in ids[idx])

    # exception grants
    grant = active & queue.awaits[:n] & (queue.grant_at[:n] <= t)
    if grant.any():
        for i in np.nonzero(grant)[0]:
            k = int(queue.class_idx[i])
            mxp_k = int(model.mxp_target[k])
            c = t - queue.entered[i]
            real, pred = _grant_redraw(model, mxp_k, c, rng)
            queue.class_idx[i] = mxp_k
            queue.awaits[i] = False
            queue.mobile[i] = False
            queue.grant_at[i] = math.inf
            queue.entered[i] = t          # waiting time resets at the grant
            queue.real_death[i] = t + real
            queue.pred_death[i] = t + pred
            events.granted.append((int(ids[i]), mxp_k))

    # MELD moves
    mob = active & queue.mobile[:n]
    u = rng.random(n)
    move = mob & (u < model.p_meld)
    if move.any():
        for i in np.nonzero(move)[0]:
            k = int(queue.class_idx[i])
            j = _meld_destination(model, k, rng)
            c = t - queue.entered[i]
            real, pred = _transition_redraw(model, j, c, rng)
            queue.class_idx[i] = j
            queue.real_death[i] = t + real
            queue.pred_death[i] = t + pred
            events.transitions.append((int(ids[i]), k, j))
        if events.redrawn:
            moved = {rec[0] for rec in events.transitions}
            events.redrawn = [i for i in events.redrawn if i not in moved]
    return events


# ---------------------------------------------------------------------------
# Contract-level single-item operations


def grant_mxp(item: Item, model: SimulationModel, rng: np.random.Generator) -> Item:
    """Grant a due MELD exception: flip the class, reset the waiting time.

    Real patience is redrawn from the exception class's law conditioned on
    the time already spent in line (shifted back to a residual); predictive
    patience is redrawn from the empirical law.
    """
    if not item.awaits_mxp:
        raise ValueError(f"item {item.id} is not waiting for an exception")
    if not -1.0 < item.mxp_timer <= 0.0:
        raise ValueError(f"exception timer of item {item.id} is not due "
                         f"(timer={item.mxp_timer})")
    k = model.class_index[item.cls]
    mxp_k = int(model.mxp_target[k])
    real, pred = _grant_redraw(model, mxp_k, item.waiting_time, rng)
    return Item(model.classes[mxp_k], real, pred, 0.0, NOT_AWAITING_TIMER, item.id)


def maybe_remeld(item: Item, model: SimulationModel, rng: np.random.Generator) -> Item:
    """One step of the MELD-move clock for a single item.

    Exception holders and awaiting patients never move. Otherwise the item
    moves with probability ``p_meld``: direction first (deterioration with
    probability ``p_up`` when both directions exist), then a destination
    band weighted by arrival mass, then both patiences are redrawn from the
    destination law conditioned on the time spent, shifted. Waiting time is
    preserved.
    """
    cls = item.cls
    if not isinstance(cls, RecipientClass):
        raise TypeError("only recipients change MELD bands")
    k = model.class_index[cls]
    if not model.mobile_flag[k]:
        return item
    if rng.random() >= model.p_meld:
        return item
    j = _meld_destination(model, k, rng)
    real, pred = _transition_redraw(model, j, item.waiting_time, rng)
    return Item(model.classes[j], real, pred, item.waiting_time,
                item.mxp_timer, item.id)


# ---------------------------------------------------------------------------
# One step and one phase


def step(state: SimState, policy: PolicyKind, model: SimulationModel,
         streams: Streams) -> StepEvents:
    """One simulation step: arrival draw, queue actualization, match/enqueue."""
    queue = state.queue
    tallies = state.tallies
    arrival = _draw_arrival(model, streams.arrival, state.shortage, state.alloc_id())
    events = actualize(queue, model, streams.dynamics)

    ledger = state.ledger
    if ledger is not None:
        t_rel = queue.now - state.phase_start
        for item_id in events.reneged:
            ledger.close(item_id, OUTCOME_DDTS, t_rel)
        for item_id, new_k in events.granted:
            ledger.set_class(item_id, new_k)
    tallies.reneged += len(events.reneged)
    tallies.grants += len(events.granted)
    tallies.meld_transitions += len(events.transitions)
    tallies.predictive_redraws += len(events.redrawn)

    if arrival is None:
        tallies.donors_suppressed += 1
        return events

    if arrival[0] == "donor":
        donor_id = arrival[1]
        tallies.donors_arrived += 1
        n = queue.n
        candidate = queue.active[:n] & ~queue.awaits[:n]
        slot = _select_slot(policy, queue, candidate,
                            model.score_const, model.score_slope)
        if slot is None:
            tallies.discarded += 1
            events.discarded.append(donor_id)
        else:
            recipient_id = int(queue.ids[slot])
            queue.active[slot] = False
            tallies.transplants += 1
            events.transplants.append((donor_id, recipient_id))
            if ledger is not None:
                ledger.close(recipient_id, OUTCOME_LTX, queue.now - state.phase_start)
        return events

    k, grant_delay, real, pred, item_id = arrival
    grant_at = queue.now + grant_delay if math.isfinite(grant_delay) else math.inf
    queue.append_slot(
        class_idx=k,
        real_death=queue.now + real,
        pred_death=queue.now + pred,
        grant_at=grant_at,
        item_id=item_id,
        awaits=bool(model.awaits_flag[k]),
        mobile=bool(model.mobile_flag[k]),
    )
    tallies.recipients_enqueued += 1
    if ledger is not None:
        ledger.add(item_id, k, queue.now - state.phase_start)
    return events


def run_phase(
    queue: Queue | None,
    model: SimulationModel,
    policy: PolicyKind,
    streams: Streams,
    years: float,
    shortage: float = 0.0,
    record_fates: bool = False,
    warming: bool = False,
    next_id: int = 1,
    event_writer=None,
) -> tuple[Queue, FateLedger | None, PhaseTallies, int]:
    """Simulate one phase; returns (queue, ledger, tallies, next free id).

    The warm-up phase runs with ``shortage=0`` and ``record_fates=False``;
    the study phase records, per recipient, the class held on entering the
    observed window (updated to the exception class if one is granted), the
    outcome, and the time spent. The flow-conservation identity is checked
    at the end of every phase.
    """
    if queue is None:
        queue = Queue()
    state = SimState(
        queue=queue,
        shortage=shortage,
        warming=warming,
        next_id=next_id,
        phase_start=queue.now,
        ledger=_LedgerBuilder() if record_fates else None,
    )
    state.tallies.initial_queue_size = len(queue)
    if state.ledger is not None:
        for slot in queue.live_slots():
            state.ledger.add(int(queue.ids[slot]), int(queue.class_idx[slot]), 0.0)

    n_steps = int(round(years * model.steps_per_year))
    for k in range(n_steps):
        events = step(state, policy, model, streams)
        if event_writer is not None:
            event_writer(k, queue.now, events)
        if k % 256 == 0:
            queue.compact()
    queue.compact(min_dead=0)

    still_waiting = len(queue)
    state.tallies.still_waiting = still_waiting
    state.tallies.check_conservation(still_waiting)
    ledger = None
    if state.ledger is not None:
        ledger = state.ledger.finalize(
            years, model, model.incident_window_years, state.tallies)
    return queue, ledger, state.tallies, state.next_id
