"""Run configuration: the single file that fully specifies a simulation.

Configs are JSON objects; any absent key falls back to the shipped default,
so ``{}`` is a valid config. The resolved configuration plus the master seed
determine every output byte. See the README for the field-by-field schema.

Arrival volumes are expressed as expected counts over ``count_period_years``
(default: two years, matching how the waiting-list flow is usually
reported). One item arrives per step, so the default ``steps_per_year`` is
the total count divided by the period; overriding it rescales the whole
system while preserving class proportions.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .classes import (
    AWAITING_INDICATIONS,
    Indication,
    MeldBand,
    MXP_BANDS,
    RecipientClass,
    class_key,
    parse_class_key,
    recipient_classes,
)

__all__ = ["RunConfig", "ConfigError", "default_config", "parse_config",
           "config_to_dict", "config_from_dict", "config_hash", "write_config"]


class ConfigError(ValueError):
    """Configuration problem; ``key`` names the offending field."""

    def __init__(self, key: str, message: str) -> None:
        self.key = key
        super().__init__(f"config key '{key}': {message}")


def _default_arrival_counts() -> dict[str, float]:
    """Expected arrivals per two years, per class.

    Aggregates: 3758 patients (1334 CIRRH + 1304 HCC + 340 OTHER + 780
    waiting for an exception) and 2458 organs. HCC mass sits in the low
    MELD bands and CIRRH in the high ones; overall per-band counts still
    decrease with severity once exception-track patients are included.
    """
    counts: dict[str, float] = {"DONOR": 2458.0}
    per_band = {
        (Indication.CIRRH, False): (1334.0, [0.09, 0.11, 0.14, 0.20, 0.23, 0.23]),
        (Indication.HCC, False): (1304.0, [0.38, 0.26, 0.17, 0.10, 0.06, 0.03]),
        (Indication.OTHER, False): (340.0, [0.26, 0.21, 0.18, 0.14, 0.12, 0.09]),
        (Indication.CIRRH, True): (560.0, [0.45, 0.32, 0.23]),
        (Indication.OTHER, True): (220.0, [0.45, 0.32, 0.23]),
    }
    for (ind, awaits), (total, props) in per_band.items():
        bands = MXP_BANDS if awaits else tuple(MeldBand)
        for band, p in zip(bands, props):
            counts[class_key(RecipientClass(ind, band, awaits))] = round(total * p, 3)
    return counts


def _default_patience() -> dict[str, dict]:
    """Weibull baselines and per-band log hazard ratios, per indication.

    Calibrated so that the default scenario matrix lands near the reference
    outcome rates (death/dropout around 31% of the incident cohort without
    extra organ shortage, rising past 50% when half the organs are removed).
    HCC risk is nearly flat in MELD -- tumor progression, not liver failure,
    drives dropout -- which is what starves HCC patients under the score
    policy at deep shortage.
    """
    def stratum(sigma, shape, ratios):
        return {"sigma": sigma, "shape": shape,
                "log_hr": [round(math.log(r), 6) for r in ratios]}

    return {
        "CIRRH": stratum(4.6, 1.1, [0.13, 0.22, 0.40, 0.85, 1.8, 3.3]),
        "HCC": stratum(2.5, 1.2, [0.85, 0.95, 1.05, 1.2, 1.5, 1.9]),
        "OTHER": stratum(2.8, 1.1, [0.62, 0.80, 1.0, 1.5, 2.4, 3.8]),
        "MXP": stratum(9.0, 1.0, [0.8, 1.0, 1.3, 1.6, 2.0, 2.5]),
    }


def _default_grant() -> dict[str, dict]:
    """Time-to-grant laws for patients waiting on a MELD exception."""
    def stratum(sigma, shape, ratios):
        return {"sigma": sigma, "shape": shape,
                "log_hr": [round(math.log(r), 6) for r in ratios]}

    return {
        "CIRRH": stratum(0.45, 1.0, [1.0, 1.15, 1.35, 1.0, 1.0, 1.0]),
        "OTHER": stratum(0.40, 1.0, [1.0, 1.15, 1.35, 1.0, 1.0, 1.0]),
    }


def _default_mxp_predictive() -> dict:
    """Tabulated survival of the predictive patience for exception holders.

    Monthly grid over four years; stands in for the empirical
    time-to-transplant curve of exception patients.
    """
    months = list(range(0, 49))
    surv = [round(math.exp(-((m / 18.0) ** 1.3)), 6) for m in months]
    return {"times": [round(m / 12.0, 6) for m in months], "survival": surv}


def _default_score() -> dict:
    return {
        "base_points": [100.0, 280.0, 460.0, 700.0, 850.0, 1000.0],
        "wait_slope": {"CIRRH": 0.0, "HCC": 300.0, "OTHER": 300.0, "MXP": 300.0},
        "mxp_bonus": 725.0,
    }


@dataclass
class RunConfig:
    """Everything a run consumes. JSON-shaped; see README for the schema."""

    arrival_counts: dict[str, float] = field(default_factory=_default_arrival_counts)
    count_period_years: float = 2.0
    steps_per_year: int | None = None            # default: one arrival per step
    initiation_years: float = 15.0
    study_years: float = 10.0
    incident_window_years: float = 2.0
    mean_meld_change_years: float = 2.0
    p_up: float = 2.0 / 3.0                      # P(deterioration | MELD change)
    patience: dict[str, dict] = field(default_factory=_default_patience)
    grant: dict[str, dict] = field(default_factory=_default_grant)
    mxp_predictive: dict = field(default_factory=_default_mxp_predictive)
    score: dict = field(default_factory=_default_score)
    policies: list[str] = field(default_factory=lambda: ["ESDF", "SCORE"])
    shortage_levels: list[float] = field(default_factory=lambda: [0.0, 0.15, 0.30, 0.50])
    replications: int = 10
    seed: int = 20260808
    output_dir: str = "results"

    @property
    def resolved_steps_per_year(self) -> int:
        if self.steps_per_year is not None:
            return self.steps_per_year
        total = sum(self.arrival_counts.values())
        return int(round(total / self.count_period_years))

    def scenario_count(self) -> int:
        return len(self.policies) * len(self.shortage_levels)


def default_config() -> RunConfig:
    return RunConfig()


def config_to_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)


def config_from_dict(data: dict) -> RunConfig:
    """Build and validate a config from a (possibly sparse) JSON object."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    for key in data:
        if key not in known and key != "arrival_probs":
            raise ConfigError(key, "unknown key")

    merged = config_to_dict(RunConfig())
    probs = data.get("arrival_probs")
    if probs is not None:
        if "arrival_counts" in data:
            raise ConfigError("arrival_probs", "give arrival_probs or arrival_counts, not both")
        total = sum(probs.values())
        if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-9):
            raise ConfigError("arrival_probs", f"probabilities sum to {total!r}, expected 1")
        if data.get("steps_per_year") is None:
            raise ConfigError("steps_per_year",
                              "required when arrivals are given as probabilities")
        # Renormalized probabilities act as arrival weights.
        data = {k: v for k, v in data.items() if k != "arrival_probs"}
        data["arrival_counts"] = {k: v / total for k, v in probs.items()}
    for key, value in data.items():
        merged[key] = value
    cfg = RunConfig(**merged)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    _validate_arrivals(cfg)
    _validate_laws(cfg)
    _validate_matrix(cfg)


def _validate_arrivals(cfg: RunConfig) -> None:
    for key, value in cfg.arrival_counts.items():
        try:
            cls = parse_class_key(key)
        except ValueError as exc:
            raise ConfigError(f"arrival_counts.{key}", str(exc)) from exc
        if not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
            raise ConfigError(f"arrival_counts.{key}", f"must be a nonnegative number, got {value!r}")
        if isinstance(cls, RecipientClass) and cls.indication is Indication.MXP and value != 0:
            raise ConfigError(f"arrival_counts.{key}",
                              "exception holders never arrive directly; they transition in")
    if cfg.arrival_counts.get("DONOR", 0.0) <= 0:
        raise ConfigError("arrival_counts.DONOR", "a positive organ arrival count is required")
    for cls in recipient_classes():
        if cls.indication is Indication.MXP or cls.awaits_mxp:
            continue
        if cfg.arrival_counts.get(class_key(cls), 0.0) <= 0:
            raise ConfigError(f"arrival_counts.{class_key(cls)}",
                              "every ordinary recipient class needs a positive arrival count "
                              "(it normalizes the MELD transition rates)")
    if cfg.count_period_years <= 0:
        raise ConfigError("count_period_years", "must be positive")
    if cfg.resolved_steps_per_year < 2:
        raise ConfigError("steps_per_year", "must be at least 2 (the step must be shorter "
                          "than the exception-timer margin of one year)")


def _validate_laws(cfg: RunConfig) -> None:
    for ind in Indication:
        stratum = cfg.patience.get(ind.name)
        if stratum is None:
            raise ConfigError(f"patience.{ind.name}", "missing stratum")
        _validate_stratum(f"patience.{ind.name}", stratum)
    for ind in AWAITING_INDICATIONS:
        stratum = cfg.grant.get(ind.name)
        if stratum is None:
            raise ConfigError(f"grant.{ind.name}", "missing stratum")
        _validate_stratum(f"grant.{ind.name}", stratum)
    table = cfg.mxp_predictive
    times, surv = table.get("times"), table.get("survival")
    if not times or not surv or len(times) != len(surv):
        raise ConfigError("mxp_predictive", "needs matching 'times' and 'survival' lists")
    from .survival import EmpiricalLaw
    try:
        EmpiricalLaw(tuple(times), tuple(surv))
    except ValueError as exc:
        raise ConfigError("mxp_predictive", str(exc)) from exc
    base = cfg.score.get("base_points")
    if not base or len(base) != len(MeldBand):
        raise ConfigError("score.base_points", f"needs {len(MeldBand)} values")
    slopes = cfg.score.get("wait_slope", {})
    for ind in Indication:
        if ind.name not in slopes:
            raise ConfigError(f"score.wait_slope.{ind.name}", "missing slope")
    if "mxp_bonus" not in cfg.score:
        raise ConfigError("score.mxp_bonus", "missing")
    if not 0.0 <= cfg.p_up <= 1.0:
        raise ConfigError("p_up", "must lie in [0, 1]")
    if cfg.mean_meld_change_years <= 0:
        raise ConfigError("mean_meld_change_years", "must be positive")


def _validate_stratum(prefix: str, stratum: dict) -> None:
    sigma, shape = stratum.get("sigma"), stratum.get("shape")
    log_hr = stratum.get("log_hr")
    if not isinstance(sigma, (int, float)) or sigma <= 0:
        raise ConfigError(f"{prefix}.sigma", "must be a positive number")
    if not isinstance(shape, (int, float)) or shape <= 0:
        raise ConfigError(f"{prefix}.shape", "must be a positive number")
    if not isinstance(log_hr, list) or len(log_hr) != len(MeldBand):
        raise ConfigError(f"{prefix}.log_hr", f"needs {len(MeldBand)} values")
    if not all(isinstance(b, (int, float)) and math.isfinite(b) for b in log_hr):
        raise ConfigError(f"{prefix}.log_hr", "values must be finite numbers")


def _validate_matrix(cfg: RunConfig) -> None:
    from .policies import PolicyKind
    if not cfg.policies:
        raise ConfigError("policies", "at least one policy is required")
    for name in cfg.policies:
        if name not in PolicyKind.__members__:
            raise ConfigError("policies", f"unknown policy {name!r}; "
                              f"choose from {sorted(PolicyKind.__members__)}")
    if not cfg.shortage_levels:
        raise ConfigError("shortage_levels", "at least one level is required")
    for s in cfg.shortage_levels:
        if not 0.0 <= s < 1.0:
            raise ConfigError("shortage_levels", f"levels must lie in [0, 1), got {s!r}")
    if cfg.replications < 1:
        raise ConfigError("replications", "must be at least 1")
    for key in ("initiation_years", "study_years", "incident_window_years"):
        if getattr(cfg, key) < 0:
            raise ConfigError(key, "must be nonnegative")


def parse_config(path: str | Path) -> RunConfig:
    """Load, merge over defaults, and validate a JSON config file."""
    p = Path(path)
    if not p.exists():
        raise ConfigError("<file>", f"no such config file: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON in {p}: {exc}") from exc
    return config_from_dict(data)


def write_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n")


def config_hash(cfg: RunConfig) -> str:
    """Hash of the semantically meaningful fields (output location excluded)."""
    payload = config_to_dict(cfg)
    payload.pop("output_dir", None)
    payload["steps_per_year"] = cfg.resolved_steps_per_year
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
