"""
Tests for constant estimation: decay fits, closed-form bounds, record
invariants and seeded, reproducible estimation runs.

Run:
    python -m pytest tests/test_constants.py -v
"""

from fractions import Fraction

import pytest

from src.exceptions import ConfigurationError, FitFailure
from src.groups.free_product import FreeProductFiniteCyclic
from src.services.constants_service import (
    CONSTANT_NAMES,
    ConstantsRecord,
    ConstantsService,
    ceil_to_grid,
    fit_decay,
    fit_violations,
    to_rational,
)
from src.services.metric_service import MetricContext
from src.services.property_sampler import Observation, b2_holds, bin_maxima, sqrt_bounds
from src.utils.config import Settings


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _settings() -> Settings:
    return Settings(workers=1)


def _ctx(**kwargs) -> MetricContext:
    return MetricContext(FreeProductFiniteCyclic((2, 3)), config=_settings(), **kwargs)


def _bins(values: dict) -> dict:
    """{x: value} -> bin_maxima-shaped {x: (value, 1, Observation)}."""
    return {x: (Fraction(v), 1, Observation(Fraction(v), (), x)) for x, v in sorted(values.items())}


def _record(**values) -> ConstantsRecord:
    record = ConstantsRecord(delta=1, radius=4, budget=10, seed=0)
    for name, value in values.items():
        record.set(name, value)
    return record


def _fixed_fits(self, radius, budget, seed, prefix=""):
    return {
        "L": _bins({0: 2, 1: 1, 2: Fraction(1, 2), 3: Fraction(1, 4)}),
        "C": _bins({10: Fraction(1, 100), 11: Fraction(1, 200), 12: Fraction(1, 400)}),
    }


# ===========================================================================
# 1. Helpers: rationals, square roots, bins
# ===========================================================================

class TestRationalHelpers:

    def test_to_rational_of_float_is_shortest_decimal(self):
        """0.1 becomes 1/10, not its binary expansion."""
        assert to_rational(0.1) == Fraction(1, 10)

    def test_ceil_to_grid(self):
        """Values round up to the 1e-6 grid."""
        assert ceil_to_grid(Fraction(1, 3)) == Fraction(333334, 10 ** 6)
        assert ceil_to_grid(Fraction(1, 2)) == Fraction(1, 2)

    def test_sqrt_bounds_bracket_the_root(self):
        """lower <= √x < upper with a 1e-9 gap."""
        lower, upper = sqrt_bounds(Fraction(2))
        assert lower * lower <= 2 < upper * upper
        assert upper - lower == Fraction(1, 10 ** 9)

    def test_sqrt_of_negative(self):
        """Negative radicands are rejected."""
        with pytest.raises(ValueError):
            sqrt_bounds(Fraction(-1))

    @pytest.mark.parametrize("lhs,radicand,slack,expected", [
        (Fraction(4), Fraction(9), Fraction(1), True),
        (Fraction(5), Fraction(9), Fraction(1), False),
        (Fraction(3), Fraction(-1), Fraction(4), True),
        (Fraction(5), Fraction(-1), Fraction(4), False),
        (Fraction(1), Fraction(0), Fraction(2), True),
    ])
    def test_b2_holds(self, lhs, radicand, slack, expected):
        """lhs <= √max(radicand, 0) + slack, compared through squares."""
        assert b2_holds(lhs, radicand, slack) is expected

    def test_bin_maxima_keeps_largest_per_bin(self):
        """Each bin keeps its maximum, sample count and witness."""
        obs = [Observation(Fraction(1), (), 3), Observation(Fraction(2), (), 3), Observation(Fraction(1, 2), (), 1)]
        bins = bin_maxima(obs)
        assert list(bins) == [1, 3]
        assert bins[3][0] == 2
        assert bins[3][1] == 2


# ===========================================================================
# 2. Decay fits
# ===========================================================================

class TestFitDecay:

    def test_geometric_bins(self):
        """Bins 1, 1/2, 1/4 fit K = 1, β = 1/2."""
        fit = fit_decay(_bins({0: 1, 1: Fraction(1, 2), 2: Fraction(1, 4)}), "test")
        assert fit.base == Fraction(1, 2)
        assert fit.multiplier == 1
        assert fit_violations(fit, fit.bins) == []

    def test_all_zero_bins(self):
        """No nonzero defect gives K = 0, β = 0."""
        fit = fit_decay(_bins({0: 0, 5: 0}), "test")
        assert fit.multiplier == 0
        assert fit.base == 0

    def test_single_nonzero_bin(self):
        """One nonzero bin fixes β = 1/2 and fits K exactly."""
        fit = fit_decay(_bins({3: Fraction(1, 8), 4: 0}), "test")
        assert fit.base == Fraction(1, 2)
        assert fit.multiplier == 1

    def test_growing_bins_fail(self):
        """A fitted base >= 1 raises FitFailure."""
        with pytest.raises(FitFailure):
            fit_decay(_bins({0: 1, 1: 2, 2: 4}), "test")

    def test_multiplier_covers_every_bin(self):
        """K·β^x bounds every nonzero bin even off the fitted line."""
        bins = _bins({0: 1, 1: Fraction(3, 4), 2: Fraction(1, 8), 3: Fraction(1, 16)})
        fit = fit_decay(bins, "test")
        for x, (value, _, _) in bins.items():
            assert value <= fit.multiplier * fit.base ** x

    def test_tail_restriction(self):
        """With two nonzero tail bins, the slope comes from the tail only."""
        bins = _bins({0: 1, 1: 1, 10: Fraction(1, 2), 11: Fraction(1, 4)})
        fit = fit_decay(bins, "test", tail_from=10)
        assert fit.base == Fraction(1, 2)
        assert fit_violations(fit, bins) == []

    def test_violations_reported(self):
        """Bins above the bound are listed."""
        fit = fit_decay(_bins({0: 1, 1: Fraction(1, 2)}), "test")
        assert fit_violations(fit, _bins({1: 1})) == [1]


# ===========================================================================
# 3. ConstantsRecord
# ===========================================================================

class TestConstantsRecord:

    def test_set_stores_exact_strings(self):
        """Values are stored as exact rational strings."""
        record = _record(N=Fraction(7, 3))
        assert record.entries["N"].value == "7/3"
        assert record.value("N") == Fraction(7, 3)

    def test_missing_value(self):
        """value() is None for absent names; require() raises."""
        record = _record()
        assert record.value("C1") is None
        with pytest.raises(ConfigurationError):
            record.require("C1")

    def test_none_value_is_kept(self):
        """An undefined constant is recorded with value None."""
        record = _record()
        record.set("N_coupled", None, note="undefined")
        assert record.entries["N_coupled"].value is None
        assert record.value("N_coupled") is None

    def test_round_trips_through_json(self):
        """model_dump_json / model_validate_json preserve every entry."""
        record = _record(N=1, C2=Fraction(5, 2))
        record.c2_metric = "7/2"
        again = ConstantsRecord.model_validate_json(record.model_dump_json())
        assert again == record
        assert again.metric_c2 == Fraction(7, 2)

    def test_check_invariants_ignores_empirical_entries(self):
        """Only formula-mode entries are checked against their formulas."""
        record = _record(N=1, D=5)
        assert record.check_invariants() == []

    def test_check_invariants_flags_broken_formula(self):
        """A formula-mode D different from (1 + N)/2 is reported."""
        record = _record(N=1)
        record.set("D", 5, "formula")
        problems = record.check_invariants()
        assert len(problems) == 1
        assert problems[0].startswith("D = 5")


# ===========================================================================
# 4. Closed-form bounds
# ===========================================================================

class TestFormulaValues:

    def test_closed_forms(self):
        """Dependent constants follow from N, L and λ."""
        service = ConstantsService(_ctx(), _settings())
        values = service.formula_values(_record(N=1, L=1, **{"lambda": Fraction(1, 2)}))
        c1 = (80 + 1 + 36) * Fraction(2) ** 18 * 2
        m_prime = (20 + 3 + 36) * Fraction(2) ** 19 * 2
        m = (1 + 1 + m_prime) / 2
        c2 = 2 * m + 3 * c1
        assert values["D"] == 1
        assert values["C1"] == c1
        assert values["M_prime"] == m_prime
        assert values["M"] == m
        assert values["C2"] == c2
        assert values["delta1"] == m + c1 + 2 * c2
        assert values["delta_prime"] == 2 + 3 * c1 + 2
        assert values["delta2"] == (values["delta1"] + values["delta_prime"]) / 2
        assert values["A_qi"] == 10
        assert values["B_qi"] == c2

    def test_lambda_zero_leaves_power_terms_undefined(self):
        """λ = 0 gives None for every constant needing λ^(−k)."""
        service = ConstantsService(_ctx(), _settings())
        values = service.formula_values(_record(N=1, L=0, **{"lambda": 0}))
        assert values["D"] == 1
        assert values["C1"] is None
        assert values["C2"] is None
        assert values["A_qi"] == 10

    def test_applied_formulas_satisfy_invariants(self):
        """A record filled in formula mode passes check_invariants."""
        service = ConstantsService(_ctx(), _settings())
        record = _record(N=2, L=Fraction(3, 2), **{"lambda": Fraction(1, 3)})
        service._apply_formulas(record)
        assert record.entries["C1"].mode == "formula"
        assert record.check_invariants() == []


# ===========================================================================
# 5. Estimation runs
# ===========================================================================

class TestEstimateConstants:

    def _estimate(self, mocker, seed=3, **kwargs):
        mocker.patch.object(ConstantsService, "_fits", _fixed_fits)
        ctx = _ctx()
        record = ConstantsService(ctx, _settings()).estimate_constants(
            radius=4, budget=12, seed=seed, **kwargs)
        return ctx, record

    def test_every_constant_is_recorded(self, mocker):
        """An empirical run fills every named constant."""
        _, record = self._estimate(mocker)
        assert set(CONSTANT_NAMES) <= set(record.entries)
        assert record.mode == "empirical"

    def test_same_seed_same_record(self, mocker):
        """Estimation is a function of (model, radius, budget, seed)."""
        _, first = self._estimate(mocker)
        _, second = self._estimate(mocker)
        assert first.model_dump() == second.model_dump()

    def test_fits_populate_decay_constants(self, mocker):
        """L, λ, C and μ come from the decay fits."""
        _, record = self._estimate(mocker)
        assert record.value("lambda") == Fraction(1, 2)
        assert record.value("L") == 2
        assert record.value("mu") == Fraction(1, 2)

    def test_metric_c2_adds_margin(self, mocker):
        """Empirical C2 for d̂ is Ĉ2 plus the safety margin."""
        ctx, record = self._estimate(mocker, c2_margin=Fraction(3, 2))
        assert record.c2_margin == "3/2"
        assert record.metric_c2 - Fraction(3, 2) <= record.value("C2")
        assert ctx.c2 == record.metric_c2
        if record.entries["C2"].certified:
            assert record.metric_c2 == record.value("C2") + Fraction(3, 2)

    def test_user_c2(self, mocker):
        """c2_source user sets d̂'s C2 to the given value."""
        ctx, record = self._estimate(mocker, c2_source="user", c2_user=Fraction(9))
        assert record.metric_c2 == 9
        assert ctx.c2 == 9

    def test_overrides_win(self, mocker):
        """User overrides replace estimates and are tagged user."""
        _, record = self._estimate(mocker, overrides={"N": Fraction(42)})
        assert record.value("N") == 42
        assert record.entries["N"].mode == "user"

    def test_formula_mode(self, mocker):
        """Formula mode fills dependent constants from the closed forms."""
        _, record = self._estimate(mocker, mode="formula")
        assert record.mode == "formula"
        assert record.entries["C1"].mode == "formula"
        assert record.check_invariants() == []

    def test_delta2_covers_halfway_point(self, mocker):
        """δ2 is at least (δ1 + δ')/2."""
        _, record = self._estimate(mocker)
        assert record.value("delta2") >= (record.value("delta1") + record.value("delta_prime")) / 2

    def test_coupled_n(self, mocker):
        """N_coupled = max(N', 27δλ'/(1 − λ')) when λ' < 1."""
        _, record = self._estimate(mocker)
        lam = record.value("lambda_prime")
        if lam < 1:
            assert record.value("N_coupled") == max(record.value("N_prime"), 27 * lam / (1 - lam))
        else:
            assert record.value("N_coupled") is None


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
