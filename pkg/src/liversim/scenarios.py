"""Scenario matrix execution and the endpoint statistics.

A scenario is a (policy, organ-shortage level) pair run for a number of
replications. Every replication warms the queue up from empty for the
configured number of years without shortage, then runs the study phase with
the scenario's shortage applied to organ arrivals. Endpoints are crude
rates over the incident cohort -- recipients arriving during the first
years of the study window -- followed to the end of the window.

Replication streams depend only on (master seed, replication index), so the
warm-up for a given policy is shared across shortage levels (bit-identical
to rerunning it) and patient arrivals are identical across scenarios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

import numpy as np

from .classes import Indication, MeldBand, RecipientClass, class_key, enumerate_classes
from .engine import (
    OUTCOME_DDTS,
    OUTCOME_LTX,
    FateLedger,
    SimulationModel,
    Streams,
    run_phase,
)
from .policies import PolicyKind

__all__ = [
    "ScenarioSpec",
    "Rates",
    "ScenarioResult",
    "crude_rates",
    "ddts_variance",
    "run_scenarios",
    "run_matrix",
    "scenario_label",
]

VARIANCE_INDICATIONS = (Indication.CIRRH, Indication.HCC, Indication.OTHER)


@dataclass(frozen=True)
class ScenarioSpec:
    """One cell of the scenario matrix."""

    policy: PolicyKind
    shortage: float
    replications: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not 0.0 <= self.shortage < 1.0:
            raise ValueError("shortage must lie in [0, 1)")


def scenario_label(policy: str, shortage: float) -> str:
    return f"{policy}_s{int(round(shortage * 100))}"


class Rates(NamedTuple):
    """Crude outcome rates over a cohort stratum; NaN marks an empty stratum."""

    ddts: float
    ltx: float
    alive: float
    n: int


def crude_rates(
    ledger: FateLedger,
    indication: Indication | None = None,
    band: MeldBand | None = None,
    prevalent: bool = False,
) -> Rates:
    """Outcome rates over one stratum of the incident (or prevalent) cohort.

    Counts are integers and sum exactly to the stratum size; an empty
    stratum yields NaN rates (not zeros).
    """
    mask = ledger.prevalent if prevalent else ledger.incident
    if indication is not None:
        mask = mask & (ledger.indication == int(indication))
    if band is not None:
        mask = mask & (ledger.band == int(band))
    n = int(np.count_nonzero(mask))
    if n == 0:
        return Rates(math.nan, math.nan, math.nan, 0)
    outcome = ledger.outcome[mask]
    n_ddts = int(np.count_nonzero(outcome == OUTCOME_DDTS))
    n_ltx = int(np.count_nonzero(outcome == OUTCOME_LTX))
    n_alive = n - n_ddts - n_ltx
    return Rates(n_ddts / n, n_ltx / n, n_alive / n, n)


@dataclass
class ScenarioResult:
    """Replication-averaged outcomes of one scenario."""

    policy: str
    shortage: float
    replications: int
    seed: int
    cohort_by_class: dict[str, float]          # initial class -> mean incident count
    indication_counts: dict[str, float]
    band_counts: dict[str, float]
    rates: dict[str, dict[str, float]]         # stratum -> {"ddts","ltx","alive"}
    prevalent_rates: dict[str, dict[str, float]]
    ddts_var: float
    tallies: dict[str, float]                  # mean per-replication flow counters
    per_replication: dict[str, list] = field(default_factory=dict)

    @property
    def label(self) -> str:
        return scenario_label(self.policy, self.shortage)

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "shortage": self.shortage,
            "replications": self.replications,
            "seed": self.seed,
            "cohort_by_class": self.cohort_by_class,
            "indication_counts": self.indication_counts,
            "band_counts": self.band_counts,
            "rates": self.rates,
            "prevalent_rates": self.prevalent_rates,
            "ddts_var": self.ddts_var,
            "tallies": self.tallies,
            "per_replication": self.per_replication,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioResult":
        return cls(**data)


def ddts_variance(result: ScenarioResult) -> float:
    """Population variance of the death/dropout rates across the three
    indications where that outcome is at stake (exception holders excluded).
    """
    values = []
    for ind in VARIANCE_INDICATIONS:
        stratum = result.rates.get(ind.name)
        if stratum is None or not math.isfinite(stratum["ddts"]):
            raise ValueError(f"DDTS rate undefined for {ind.name}")
        values.append(stratum["ddts"])
    if min(values) == max(values):
        return 0.0
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / len(values)


def _rates_dict(ledger: FateLedger, prevalent: bool) -> dict[str, dict[str, float]]:
    out = {}
    for ind in Indication:
        r = crude_rates(ledger, indication=ind, prevalent=prevalent)
        out[ind.name] = {"ddts": r.ddts, "ltx": r.ltx, "alive": r.alive, "n": r.n}
    overall = crude_rates(ledger, prevalent=prevalent)
    out["OVERALL"] = {"ddts": overall.ddts, "ltx": overall.ltx,
                      "alive": overall.alive, "n": overall.n}
    return out


def _replication_stats(ledger: FateLedger) -> dict:
    inc = ledger.incident
    stats = {
        "rates": _rates_dict(ledger, prevalent=False),
        "prevalent_rates": _rates_dict(ledger, prevalent=True),
        "class_counts": np.bincount(
            ledger.class_idx[inc], minlength=len(enumerate_classes())),
        "tallies": ledger.tallies,
    }
    return stats


def _mean(values: Iterable[float]) -> float:
    values = list(values)
    return sum(values) / len(values)


def _aggregate(spec: ScenarioSpec, reps: list[dict]) -> ScenarioResult:
    classes = enumerate_classes()
    mean_class = np.mean([r["class_counts"] for r in reps], axis=0)
    cohort_by_class = {
        class_key(c): float(mean_class[i])
        for i, c in enumerate(classes)
        if isinstance(c, RecipientClass) and mean_class[i] > 0
    }
    ind_counts = {ind.name: 0.0 for ind in Indication}
    band_counts = {band.label: 0.0 for band in MeldBand}
    for i, c in enumerate(classes):
        if isinstance(c, RecipientClass):
            ind_counts[c.indication.name] += float(mean_class[i])
            band_counts[c.meld.label] += float(mean_class[i])

    strata = list(reps[0]["rates"].keys())
    rates = {
        s: {k: _mean(r["rates"][s][k] for r in reps) for k in ("ddts", "ltx", "alive")}
        | {"n": _mean(r["rates"][s]["n"] for r in reps)}
        for s in strata
    }
    prevalent = {
        s: {k: _mean(r["prevalent_rates"][s][k] for r in reps)
            for k in ("ddts", "ltx", "alive")}
        | {"n": _mean(r["prevalent_rates"][s]["n"] for r in reps)}
        for s in strata
    }
    tallies = {
        name: _mean(getattr(r["tallies"], name) for r in reps)
        for name in ("recipients_enqueued", "donors_arrived", "donors_suppressed",
                     "transplants", "reneged", "discarded", "grants",
                     "meld_transitions", "predictive_redraws", "initial_queue_size",
                     "still_waiting")
    }
    per_rep = {
        "overall_ddts": [r["rates"]["OVERALL"]["ddts"] for r in reps],
        "overall_ltx": [r["rates"]["OVERALL"]["ltx"] for r in reps],
        "transplants": [getattr(r["tallies"], "transplants") for r in reps],
    }
    for ind in VARIANCE_INDICATIONS:
        per_rep[f"ddts_{ind.name}"] = [r["rates"][ind.name]["ddts"] for r in reps]

    result = ScenarioResult(
        policy=spec.policy.name,
        shortage=spec.shortage,
        replications=spec.replications,
        seed=spec.seed,
        cohort_by_class=cohort_by_class,
        indication_counts=ind_counts,
        band_counts=band_counts,
        rates=rates,
        prevalent_rates=prevalent,
        ddts_var=0.0,
        tallies=tallies,
        per_replication=per_rep,
    )
    result.ddts_var = ddts_variance(result)
    return result


def run_scenarios(
    specs: list[ScenarioSpec],
    model: SimulationModel,
    event_writer_factory: Callable[[ScenarioSpec, int], Callable] | None = None,
) -> list[ScenarioResult]:
    """Run every scenario and aggregate over its replications.

    The warm-up queue of (policy, seed, replication) is computed once and
    cloned for each shortage level, which is bit-identical to rerunning the
    warm-up because study streams resume from the saved stream states.
    """
    init_cache: dict[tuple[str, int, int], tuple] = {}
    results = []
    for spec in specs:
        reps = []
        for rep in range(spec.replications):
            key = (spec.policy.name, spec.seed, rep)
            snap = init_cache.get(key)
            if snap is None:
                streams = Streams.for_replication(spec.seed, rep)
                queue, _, _, _ = run_phase(
                    None, model, spec.policy, streams,
                    years=model.initiation_years, shortage=0.0, warming=True)
                snap = (queue, streams.snapshot())
                init_cache[key] = snap
            queue0, stream_state = snap
            writer = None
            if event_writer_factory is not None:
                writer = event_writer_factory(spec, rep)
            _, ledger, _, _ = run_phase(
                queue0.copy(), model, spec.policy,
                Streams.from_snapshot(stream_state),
                years=model.study_years, shortage=spec.shortage,
                record_fates=True, warming=False, next_id=1,
                event_writer=writer,
            )
            reps.append(_replication_stats(ledger))
        results.append(_aggregate(spec, reps))
    return results


def run_matrix(
    cfg,
    model: SimulationModel | None = None,
    event_writer_factory=None,
) -> list[ScenarioResult]:
    """Run the full policy x shortage matrix described by a run config."""
    from .engine import build_model

    if model is None:
        model = build_model(cfg)
    specs = [
        ScenarioSpec(PolicyKind[p], s, cfg.replications, cfg.seed)
        for p in cfg.policies
        for s in cfg.shortage_levels
    ]
    return run_scenarios(specs, model, event_writer_factory)
