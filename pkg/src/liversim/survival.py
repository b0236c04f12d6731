"""Waiting-list survival laws and their inverse-transform samplers.

Real patience (residual lifetime on the list) follows a proportional-hazards
model stratified by indication, with one coefficient per MELD band and a
Weibull baseline cumulative hazard. Predictive patience -- the simulated
lifetime the ESDF policy ranks on -- uses the same law for ordinary patients
and a tabulated empirical law for exception holders. All samplers are pure
functions of the law and a uniform draw, so replications are reproducible
from their seeds alone.

The conditional laws used throughout the engine are derived from a base law
``mu`` in two ways:

* conditioned above a floor: ``mu | >= floor`` (absolute times), used for
  patients who must survive until their exception is granted;
* conditioned and shifted: ``(mu | >= c) - c`` (residual times), used to
  redraw patience after a class change and to refresh an elapsed predictive
  patience after ``c`` years in line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .classes import Indication, MeldBand, RecipientClass

__all__ = [
    "WeibullHazard",
    "CoxLaw",
    "EmpiricalLaw",
    "NoPatience",
    "NO_PATIENCE",
    "PatienceLaw",
    "CoxModel",
    "CoxStratum",
    "MxpGrantModel",
    "SurvivalModel",
    "sample_patience",
    "sample_conditional_shifted",
    "sample_patience_conditioned_above",
    "sample_mxp_grant_time",
    "cox_quantile",
    "cox_quantile_above",
    "empirical_quantile",
    "empirical_quantile_above",
]


def _check_uniform(u: float) -> None:
    if not 0.0 < u < 1.0:
        raise ValueError(f"uniform draw must lie strictly inside (0, 1), got {u}")


# Sampling kernels. These accept scalars or aligned arrays; the law objects
# below and the engine's vectorized queue updates share them, so both paths
# compute identical values.

def cox_quantile(sigma, shape, log_hr, u):
    """t with exp(-(t/sigma)^shape * exp(log_hr)) = u."""
    return sigma * (-np.log(u) * np.exp(-np.asarray(log_hr, float))) ** (1.0 / np.asarray(shape, float))


def cox_quantile_above(sigma, shape, log_hr, floor, u):
    """Sample of the law conditioned on exceeding ``floor`` (absolute time)."""
    shape = np.asarray(shape, float)
    y = (np.asarray(floor, float) / sigma) ** shape - np.log(u) * np.exp(-np.asarray(log_hr, float))
    return sigma * y ** (1.0 / shape)


def empirical_quantile(times: np.ndarray, surv: np.ndarray, u):
    """Inverse of a tabulated survival curve; tail mass maps to the last knot."""
    return np.interp(u, surv[::-1], times[::-1])


def empirical_quantile_above(times: np.ndarray, surv: np.ndarray, grid_step: float, floor, u):
    """Conditioned-above sample from a tabulated curve (absolute time).

    Where the table has no mass beyond the floor, falls back to the last
    knot, at least one grid step past the floor.
    """
    floor = np.asarray(floor, float)
    s_floor = np.interp(floor, times, surv)
    out = np.interp(u * s_floor, surv[::-1], times[::-1])
    fallback = np.maximum(times[-1], floor + grid_step)
    return np.where(s_floor > 0.0, out, fallback)


@dataclass(frozen=True)
class WeibullHazard:
    """Baseline cumulative hazard ``(t / sigma) ** shape``.

    ``shape == 1`` is the exponential baseline with mean ``sigma``.
    """

    sigma: float
    shape: float

    def __post_init__(self) -> None:
        if self.sigma <= 0 or self.shape <= 0:
            raise ValueError("Weibull baseline needs positive sigma and shape")

    def cumulative(self, t):
        return (t / self.sigma) ** self.shape

    def inverse(self, y):
        return self.sigma * y ** (1.0 / self.shape)


@dataclass(frozen=True)
class CoxLaw:
    """Proportional-hazards survival law: S(t) = exp(-L0(t) * exp(log_hr))."""

    baseline: WeibullHazard
    log_hr: float = 0.0

    def survival(self, t):
        return np.exp(-self.baseline.cumulative(t) * math.exp(self.log_hr))

    def quantile(self, u: float) -> float:
        """Inverse-transform sample: the t with S(t) = u."""
        return float(cox_quantile(self.baseline.sigma, self.baseline.shape, self.log_hr, u))

    def quantile_above(self, floor: float, u: float) -> float:
        """Sample from the law conditioned on exceeding ``floor`` (absolute time)."""
        return float(cox_quantile_above(
            self.baseline.sigma, self.baseline.shape, self.log_hr, floor, u))


@dataclass(frozen=True)
class EmpiricalLaw:
    """Tabulated survival function with linear interpolation between knots.

    ``times`` must increase from 0 and ``survival`` must start at 1 and be
    nonincreasing. Mass not resolved by the table (``survival[-1] > 0``) is
    placed at the last knot.
    """

    times: tuple[float, ...]
    survival: tuple[float, ...]

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.survival, dtype=float)
        if t.ndim != 1 or t.shape != s.shape or t.size < 2:
            raise ValueError("empirical law needs matching 1-d time/survival tables")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must increase strictly from 0")
        if s[0] != 1.0 or np.any(np.diff(s) > 0) or np.any(s < 0) or np.any(s > 1):
            raise ValueError("survival must be nonincreasing from 1 within [0, 1]")

    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.times, float), np.asarray(self.survival, float)

    @property
    def grid_step(self) -> float:
        return self.times[1] - self.times[0]

    def survival_at(self, t: float) -> float:
        times, surv = self._arrays()
        if t >= times[-1]:
            return float(surv[-1])
        return float(np.interp(t, times, surv))

    def quantile(self, u: float) -> float:
        """The t with S(t) = u; tail mass beyond the table maps to the last knot."""
        times, surv = self._arrays()
        return float(empirical_quantile(times, surv, u))

    def quantile_above(self, floor: float, u: float) -> float:
        """Sample conditioned on exceeding ``floor``, as an absolute time.

        If the table has no mass beyond ``floor``, falls back to the last
        knot, at least one grid step past the floor.
        """
        times, surv = self._arrays()
        return float(empirical_quantile_above(times, surv, self.grid_step, floor, u))


@dataclass(frozen=True)
class NoPatience:
    """Marker law for classes that carry no patience clock."""


NO_PATIENCE = NoPatience()

PatienceLaw = CoxLaw | EmpiricalLaw | NoPatience


def sample_patience(law: PatienceLaw, u: float) -> float:
    """Draw a patience time by inverse transform: the t with S(t) = u."""
    _check_uniform(u)
    if isinstance(law, NoPatience):
        raise TypeError("this class carries no patience clock")
    return law.quantile(u)


def sample_patience_conditioned_above(law: PatienceLaw, floor: float, u: float) -> float:
    """Draw from the law conditioned on exceeding ``floor``; absolute time, >= floor."""
    _check_uniform(u)
    if isinstance(law, NoPatience):
        raise TypeError("this class carries no patience clock")
    if floor < 0:
        raise ValueError("floor must be nonnegative")
    if floor == 0.0:
        return law.quantile(u)
    return law.quantile_above(floor, u)


def sample_conditional_shifted(law: PatienceLaw, c: float, u: float) -> float:
    """Draw the residual ``(law | >= c) - c`` after ``c`` years already spent.

    This is the redraw law for elapsed predictive patience and for patience
    after a class change.
    """
    return sample_patience_conditioned_above(law, c, u) - c


@dataclass(frozen=True)
class CoxStratum:
    """One indication's stratum: a baseline hazard plus per-band coefficients."""

    baseline: WeibullHazard
    log_hr: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.log_hr) != len(MeldBand):
            raise ValueError(f"need one coefficient per MELD band "
                             f"({len(MeldBand)}), got {len(self.log_hr)}")
        if not all(math.isfinite(b) for b in self.log_hr):
            raise ValueError("band coefficients must be finite")

    def law(self, band: MeldBand) -> CoxLaw:
        return CoxLaw(self.baseline, self.log_hr[band])


@dataclass(frozen=True)
class CoxModel:
    """Stratified proportional-hazards model: one stratum per indication."""

    strata: Mapping[Indication, CoxStratum]

    def law(self, indication: Indication, band: MeldBand) -> CoxLaw:
        return self.strata[indication].law(band)


@dataclass(frozen=True)
class MxpGrantModel:
    """Time-to-exception-grant law for awaiting patients, per indication."""

    strata: Mapping[Indication, CoxStratum]

    def law(self, cls: RecipientClass) -> CoxLaw:
        if not cls.awaits_mxp:
            raise ValueError(f"{cls} is not waiting for a MELD exception")
        return self.strata[cls.indication].law(cls.meld)


def sample_mxp_grant_time(model: MxpGrantModel, cls: RecipientClass, u: float) -> float:
    """Draw the delay until an awaiting patient's exception is granted."""
    _check_uniform(u)
    return model.law(cls).quantile(u)


class SurvivalModel:
    """Per-class patience laws: the hazard model plus the exception machinery.

    ``real_law`` and ``predictive_law`` return the same object for ordinary
    patients; exception holders get the empirical predictive law; awaiting
    patients carry no law of their own (the engine draws their patience from
    the matching non-awaiting class, conditioned above the grant time).
    """

    def __init__(
        self,
        patience: CoxModel,
        mxp_predictive: EmpiricalLaw,
        grant: MxpGrantModel,
    ) -> None:
        self.patience = patience
        self.mxp_predictive = mxp_predictive
        self.grant = grant
        self._real: dict[RecipientClass, PatienceLaw] = {}

    def _cox_law(self, cls: RecipientClass) -> CoxLaw:
        law = self._real.get(cls)
        if law is None:
            law = self.patience.law(cls.indication, cls.meld)
            self._real[cls] = law
        return law  # type: ignore[return-value]

    def real_law(self, cls: RecipientClass) -> PatienceLaw:
        if cls.awaits_mxp:
            return NO_PATIENCE
        return self._cox_law(cls)

    def predictive_law(self, cls: RecipientClass) -> PatienceLaw:
        if cls.awaits_mxp:
            return NO_PATIENCE
        if cls.indication is Indication.MXP:
            return self.mxp_predictive
        return self._cox_law(cls)

    def base_law(self, cls: RecipientClass) -> CoxLaw:
        """Hazard law of the class ignoring the awaiting flag.

        Awaiting patients age and die on the clock of their underlying
        (indication, band) class; this is the law their patience is drawn
        from, conditioned above the grant time.
        """
        return self.patience.law(cls.indication, cls.meld)
