"""Survival laws: inverse-transform correctness against independent oracles.

The conditional samplers are checked against rejection sampling (draw from
the base law until the draw clears the floor), which never touches the
closed-form conditional path it validates.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from liversim import (
    CoxLaw,
    CoxModel,
    CoxStratum,
    EmpiricalLaw,
    Indication,
    MeldBand,
    MxpGrantModel,
    NO_PATIENCE,
    RecipientClass,
    WeibullHazard,
    build_model,
    default_config,
    sample_conditional_shifted,
    sample_mxp_grant_time,
    sample_patience,
    sample_patience_conditioned_above,
)
from liversim.survival import cox_quantile, cox_quantile_above

E_INV = math.exp(-1.0)
EXP_UNIT = CoxLaw(WeibullHazard(sigma=1.0, shape=1.0))          # unit-rate exponential
WEIBULL_SQ = CoxLaw(WeibullHazard(sigma=1.0, shape=2.0))        # cumulative hazard t^2


def rejection_oracle(law: CoxLaw, floor: float, n: int, rng) -> np.ndarray:
    """Draws from (law | >= floor) by resampling until the floor is cleared."""
    out = np.empty(0)
    while out.size < n:
        draws = cox_quantile(law.baseline.sigma, law.baseline.shape, law.log_hr,
                             rng.random(4 * n))
        out = np.concatenate([out, draws[draws >= floor]])
    return out[:n]


class TestInverseTransform:
    def test_unit_exponential_quantile(self):
        assert sample_patience(EXP_UNIT, E_INV) == pytest.approx(1.0, abs=1e-12)

    def test_proportional_hazard_halves_scale(self):
        law = CoxLaw(WeibullHazard(1.0, 1.0), log_hr=math.log(2.0))
        assert sample_patience(law, E_INV) == pytest.approx(0.5, abs=1e-12)

    def test_doubled_hazard_empirical_mean(self):
        # Monte-Carlo cross-check: mean of the rate-2 exponential is 1/2.
        rng = np.random.default_rng(1234)
        u = rng.random(1_000_000)
        draws = cox_quantile(1.0, 1.0, math.log(2.0), u)
        assert abs(draws.mean() - 0.5) < 0.002

    def test_weibull_square_quantile(self):
        assert sample_patience(WEIBULL_SQ, E_INV) == pytest.approx(1.0, abs=1e-12)

    def test_survival_curve_ks(self):
        # Empirical survival of 1e5 samples matches exp(-L0(t) e^beta).
        rng = np.random.default_rng(99)
        draws = cox_quantile(2.5, 1.3, 0.4, rng.random(100_000))
        res = stats.kstest(draws, lambda t: 1.0 - np.exp(-((t / 2.5) ** 1.3) * math.exp(0.4)))
        assert res.statistic < 0.01

    def test_monotone_in_coefficient(self):
        # For a fixed uniform, a higher hazard coefficient shortens survival.
        u = 0.37
        times = [sample_patience(CoxLaw(WeibullHazard(3.0, 1.2), b), u)
                 for b in (-1.0, -0.5, 0.0, 0.5, 1.0, 2.0)]
        assert all(a > b for a, b in zip(times, times[1:]))

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.5, 1.5])
    def test_uniform_domain_enforced(self, u):
        with pytest.raises(ValueError):
            sample_patience(EXP_UNIT, u)

    def test_no_patience_rejected(self):
        with pytest.raises(TypeError):
            sample_patience(NO_PATIENCE, 0.5)


class TestConditionalShifted:
    def test_zero_floor_equals_plain_sampling(self):
        for u in (0.1, 0.37, 0.9):
            assert sample_conditional_shifted(WEIBULL_SQ, 0.0, u) == \
                pytest.approx(sample_patience(WEIBULL_SQ, u), abs=1e-12)

    @pytest.mark.parametrize("c", [0.3, 1.0, 4.2])
    def test_exponential_memorylessness(self, c):
        assert sample_conditional_shifted(EXP_UNIT, c, E_INV) == pytest.approx(1.0, abs=1e-12)

    def test_weibull_shifted_value(self):
        # L0(t)=t^2, c=1: inverse of L0(c) - ln u at u=1/e is sqrt(2).
        assert sample_conditional_shifted(WEIBULL_SQ, 1.0, E_INV) == \
            pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-12)

    @pytest.mark.parametrize("c", [0.0, 0.5, 2.0, 5.0])
    def test_against_rejection_oracle(self, c):
        law = CoxLaw(WeibullHazard(2.2, 1.25), log_hr=0.3)
        rng = np.random.default_rng(7 + int(10 * c))
        shifted = cox_quantile_above(2.2, 1.25, 0.3, c, rng.random(100_000)) - c
        oracle = rejection_oracle(law, c, 100_000, rng) - c
        res = stats.ks_2samp(shifted, oracle)
        assert res.statistic < 0.015

    def test_always_nonnegative(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            c = rng.random() * 10
            v = sample_conditional_shifted(WEIBULL_SQ, c, rng.random())
            assert v >= 0.0


class TestConditionedAbove:
    def test_zero_floor_identity(self):
        for u in (0.2, 0.8):
            assert sample_patience_conditioned_above(EXP_UNIT, 0.0, u) == \
                pytest.approx(sample_patience(EXP_UNIT, u), abs=1e-12)

    def test_exponential_with_floor(self):
        assert sample_patience_conditioned_above(EXP_UNIT, 2.0, E_INV) == \
            pytest.approx(3.0, abs=1e-12)

    def test_floor_respected_in_bulk(self):
        rng = np.random.default_rng(11)
        draws = cox_quantile_above(1.7, 1.4, -0.2, 2.5, rng.random(100_000))
        assert draws.min() >= 2.5

    def test_negative_floor_rejected(self):
        with pytest.raises(ValueError):
            sample_patience_conditioned_above(EXP_UNIT, -1.0, 0.5)


class TestEmpiricalLaw:
    TABLE = EmpiricalLaw(times=(0.0, 1.0, 2.0, 3.0), survival=(1.0, 0.5, 0.25, 0.0))

    def test_quantile_interpolates(self):
        assert self.TABLE.quantile(0.75) == pytest.approx(0.5)
        assert self.TABLE.quantile(0.5) == pytest.approx(1.0)
        assert self.TABLE.quantile(0.125) == pytest.approx(2.5)

    def test_tail_mass_maps_to_last_knot(self):
        trunc = EmpiricalLaw(times=(0.0, 1.0, 2.0), survival=(1.0, 0.6, 0.2))
        assert trunc.quantile(0.1) == pytest.approx(2.0)

    def test_conditional_consistency(self):
        # S(1)=0.5; conditioning halves the target survival level.
        t = self.TABLE.quantile_above(1.0, E_INV)
        # target level u * S(1) = 0.18394; between knots 2 and 3
        expected = 2.0 + (0.25 - E_INV * 0.5) / 0.25
        assert t == pytest.approx(expected, abs=1e-12)

    def test_fallback_beyond_support(self):
        # No mass beyond the floor: land one grid step past it.
        assert self.TABLE.quantile_above(5.0, 0.5) == pytest.approx(6.0)
        assert sample_conditional_shifted(self.TABLE, 5.0, 0.5) == pytest.approx(1.0)

    def test_rejection_oracle_on_table(self):
        rng = np.random.default_rng(17)
        cond = np.array([self.TABLE.quantile_above(0.5, u) for u in rng.random(2000)])
        base = np.array([self.TABLE.quantile(u) for u in rng.random(80_000)])
        oracle = base[base >= 0.5][:2000]
        res = stats.ks_2samp(cond, oracle)
        assert res.statistic < 0.05

    @pytest.mark.parametrize("times,surv", [
        ((0.0, 1.0), (1.0, 1.1)),          # above 1
        ((0.0, 1.0, 2.0), (1.0, 0.4, 0.6)),  # increasing segment
        ((0.5, 1.0), (1.0, 0.5)),          # does not start at 0
        ((0.0, 1.0), (0.9, 0.5)),          # does not start at 1
    ])
    def test_invalid_tables_rejected(self, times, surv):
        with pytest.raises(ValueError):
            EmpiricalLaw(times=times, survival=surv)


class TestGrantTimes:
    MODEL = MxpGrantModel({
        Indication.CIRRH: CoxStratum(WeibullHazard(0.5, 1.0), (0.0,) * 6),
        Indication.OTHER: CoxStratum(WeibullHazard(0.4, 1.0), (0.0,) * 6),
    })
    AWAITING = RecipientClass(Indication.CIRRH, MeldBand.B1, awaits_mxp=True)

    def test_exponential_grant_quantile(self):
        # Rate 2/yr exponential: the 1/e quantile is half a year.
        assert sample_mxp_grant_time(self.MODEL, self.AWAITING, E_INV) == \
            pytest.approx(0.5, abs=1e-12)

    def test_grant_mean_monte_carlo(self):
        rng = np.random.default_rng(23)
        draws = np.array([sample_mxp_grant_time(self.MODEL, self.AWAITING, u)
                          for u in rng.random(100_000)])
        assert abs(draws.mean() - 0.5) / 0.5 < 0.01

    def test_non_awaiting_class_rejected(self):
        with pytest.raises(ValueError):
            sample_mxp_grant_time(self.MODEL, RecipientClass(Indication.CIRRH, MeldBand.B1), 0.5)


class TestModelWiring:
    def test_real_and_predictive_share_law_object(self):
        model = build_model(default_config())
        for cls in (RecipientClass(Indication.CIRRH, MeldBand.B4),
                    RecipientClass(Indication.HCC, MeldBand.B1),
                    RecipientClass(Indication.OTHER, MeldBand.B6)):
            assert model.survival.real_law(cls) is model.survival.predictive_law(cls)

    def test_mxp_predictive_is_empirical(self):
        model = build_model(default_config())
        cls = RecipientClass(Indication.MXP, MeldBand.B2)
        assert isinstance(model.survival.predictive_law(cls), EmpiricalLaw)
        assert isinstance(model.survival.real_law(cls), CoxLaw)

    def test_awaiting_classes_have_no_own_law(self):
        model = build_model(default_config())
        cls = RecipientClass(Indication.OTHER, MeldBand.B1, awaits_mxp=True)
        assert model.survival.real_law(cls) is NO_PATIENCE
        assert model.survival.predictive_law(cls) is NO_PATIENCE

    def test_stratum_needs_six_coefficients(self):
        with pytest.raises(ValueError):
            CoxStratum(WeibullHazard(1.0, 1.0), (0.0, 0.0))

    def test_cox_model_lookup(self):
        model = CoxModel({Indication.HCC: CoxStratum(WeibullHazard(2.0, 1.0),
                                                     (0.1, 0.2, 0.3, 0.4, 0.5, 0.6))})
        law = model.law(Indication.HCC, MeldBand.B3)
        assert law.log_hr == 0.3


@settings(max_examples=60, deadline=None)
@given(
    sigma=st.floats(min_value=0.1, max_value=20.0),
    shape=st.floats(min_value=0.3, max_value=4.0),
    log_hr=st.floats(min_value=-2.0, max_value=2.0),
    floor=st.floats(min_value=0.0, max_value=15.0),
    u=st.floats(min_value=1e-6, max_value=1.0, exclude_max=True),
)
def test_conditioned_samples_clear_their_floor(sigma, shape, log_hr, floor, u):
    law = CoxLaw(WeibullHazard(sigma, shape), log_hr)
    t = sample_patience_conditioned_above(law, floor, u)
    assert t >= floor
    assert sample_conditional_shifted(law, floor, u) == pytest.approx(t - floor, abs=1e-9)
