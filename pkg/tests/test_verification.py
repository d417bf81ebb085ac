"""
Tests for the property suites and the estimate/verify pipelines.

Structural checks run exhaustively on small balls of Z/2 * Z/3; the metric
and bolic suites run against hand-written constants records so that their
outcome does not depend on an estimation run.

Run:
    python -m pytest tests/test_verification.py -v
    python -m pytest tests/test_verification.py -v -m slow   # desk-scale runs
"""

import json
from fractions import Fraction

import pytest

from src.exceptions import ConfigurationError, FormatError
from src.groups.free_product import FreeProductFiniteCyclic
from src.groups.table_model import export_ball, load_table_model
from src.services.constants_service import ConstantsRecord
from src.services.metric_service import MetricContext
from src.services.property_sampler import Observation
from src.services.verification_orchestrator import VerificationOrchestrator, load_constants
from src.services.verification_service import VerificationService
from src.utils.config import ConstructionParameters, RunConfig, Settings


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _settings() -> Settings:
    return Settings(workers=1)


def _ctx(c2=None, **construction) -> MetricContext:
    return MetricContext(
        FreeProductFiniteCyclic((2, 3)),
        c2=c2,
        construction=ConstructionParameters(**construction) if construction else None,
        config=_settings(),
    )


def _service(ctx=None) -> VerificationService:
    return VerificationService(ctx or _ctx(), _settings())


def _generous_record(**overrides) -> ConstantsRecord:
    """Constants large enough for every bound on B(1,4)."""
    values = {
        "N": 1, "N_prime": 1, "D": 1, "L": 4, "lambda": Fraction(1, 2),
        "lambda_prime": Fraction(1, 2), "C1": 100, "M_prime": 100, "M": 100, "C2": 10,
        "C": 1000, "mu": Fraction(1, 2), "delta1": 20, "delta_prime": 30, "delta2": 30,
        "A_qi": 10, "B_qi": 10,
    }
    values.update(overrides)
    record = ConstantsRecord(delta=1, radius=4, budget=100, seed=0, c2_metric="10")
    for name, value in values.items():
        if value is not None:
            record.set(name, value)
    return record


# ===========================================================================
# 1. Property runner
# ===========================================================================

class TestCheckProperty:

    def test_zero_budget_is_insufficient(self):
        """Budget 0 passes vacuously and is flagged insufficient."""
        report = _service().verify_structural(radius=4, budget=0)
        assert report.passed
        for prop in report.properties:
            assert prop.samples == 0
            assert prop.insufficient

    def test_threshold_comparison(self):
        """A property fails exactly when its max defect exceeds the threshold."""
        svc = _service()
        one = svc.model.normalize((0,))

        def draw(rng, radius):
            return Observation(Fraction(3, 2), (one,))

        assert svc.check_property("x", "claim", Fraction(3, 2), 2, 5, 0, draw).passed
        failed = svc.check_property("x", "claim", 1, 2, 5, 0, draw)
        assert not failed.passed
        assert failed.max_defect == "3/2"
        assert failed.witnesses[0].points == ["s"]

    def test_missing_threshold_fails(self):
        """A constant absent from the record makes its property fail."""
        svc = _service()
        result = svc.check_property("x", "claim", None, 2, 5, 0,
                                    lambda rng, radius: Observation(0, ()))
        assert not result.passed
        assert result.threshold == "unavailable"

    def test_draws_returning_none_are_skipped(self):
        """Filtered draws do not count as samples."""
        svc = _service()
        result = svc.check_property("x", "claim", 0, 2, 10, 0, lambda rng, radius: None)
        assert result.samples == 0
        assert result.insufficient

    def test_witnesses_are_capped(self):
        """At most three witnesses are kept, largest first."""
        svc = _service()
        result = svc.check_property("x", "claim", 100, 3, 20, 0,
                                    lambda rng, radius: Observation(Fraction(rng.randint(0, 50)), ()))
        defects = [Fraction(w.defect) for w in result.witnesses]
        assert len(defects) == 3
        assert defects == sorted(defects, reverse=True)
        assert defects[0] == Fraction(result.max_defect)


# ===========================================================================
# 2. Structural suite
# ===========================================================================

class TestStructuralSuite:

    def test_small_ball_passes_exhaustively(self):
        """Every structural claim holds on B(1,6) and the pair checks are exhaustive."""
        report = _service().verify_structural(radius=6, budget=100, seed=2)
        assert report.passed, report.failures
        assert report.get("f.convex").exhaustive
        assert report.get("f.convex").samples == 50
        assert not report.get("fbar.tube").exhaustive

    @pytest.mark.slow
    def test_past_ten_delta_passes(self):
        """The claims hold exhaustively on B(1,12), where f projects."""
        report = _service().verify_structural(radius=12, budget=500, seed=5)
        assert report.passed, report.failures
        assert report.get("f.support").exhaustive

    def test_six_delta_star_is_caught(self):
        """A 6δ star breaks fbar.star_profile."""
        report = _service(_ctx(star_radius_factor=6)).verify_structural(radius=4, budget=100, seed=1)
        prop = report.get("fbar.star_profile")
        assert not prop.passed
        assert Fraction(prop.max_defect) > 0
        assert prop.witnesses

    def test_nine_delta_step_is_caught(self):
        """A 9δ projection step moves f off S(b, 10δ) and breaks f.support."""
        report = _service(_ctx(projection_step_factor=9)).verify_structural(radius=12, budget=500, seed=1)
        assert not report.get("f.support").passed
        assert "f.support" in report.failures

    def test_table_models_skip_equivariance(self, tmp_path):
        """Equivariance needs translations, which table models lack."""
        path = tmp_path / "ball.json"
        export_ball(FreeProductFiniteCyclic((2, 3)), 8, path)
        ctx = MetricContext(load_table_model(path), config=_settings())
        report = _service(ctx).verify_structural(radius=1, budget=5, seed=0)
        prop = report.get("f.equivariance")
        assert prop.insufficient
        assert "table models" in prop.note


# ===========================================================================
# 3. r, metric and bolic suites
# ===========================================================================

class TestRSuite:

    def test_r_properties_hold_on_small_ball(self):
        """Sandwich, shift, Lipschitz and equivariance hold with generous constants."""
        report = _service().verify_r_properties(_generous_record(), radius=4, budget=100, seed=3)
        for property_id in ("r.sandwich", "r.shift", "r.chain", "r.lipschitz", "r.equivariance"):
            assert report.get(property_id).passed, property_id
        assert report.get("r.sandwich").exhaustive

    def test_missing_constant_fails_property(self):
        """Without N the shift property cannot pass."""
        record = _generous_record(N=None)
        report = _service().verify_r_properties(record, radius=3, budget=20, seed=3)
        shift = report.get("r.shift")
        assert not shift.passed
        assert shift.threshold == "unavailable"
        assert not report.passed

    def test_four_point_bins_are_exported(self):
        """The four-point property carries its decay bins."""
        report = _service().verify_r_properties(_generous_record(), radius=3, budget=30, seed=3)
        bins = report.get("r.four_point_decay").bins
        assert bins is not None
        assert [b.d_bin for b in bins] == sorted(b.d_bin for b in bins)
        assert sum(b.samples for b in bins) == 30


class TestMetricSuite:

    def test_metric_axioms_exhaustive(self):
        """Symmetry, identity, near-constancy, envelope and triangle hold on B(1,4)."""
        report = _service(_ctx(c2=10)).verify_metric(_generous_record(), radius=4, budget=500, seed=3)
        for property_id in ("dhat.symmetry", "dhat.identity", "dhat.near_constancy",
                            "dhat.envelope", "dhat.triangle"):
            prop = report.get(property_id)
            assert prop.passed, property_id
            assert prop.exhaustive, property_id
        assert report.get("dhat.triangle").samples == 22 * 22
        assert report.c2 == "10"

    def test_s_bounds_and_equivariance(self):
        """s-level bounds and d̂ equivariance hold with generous constants."""
        report = _service(_ctx(c2=10)).verify_metric(_generous_record(), radius=4, budget=60, seed=8)
        for property_id in ("s.lipschitz", "s.additivity", "s.triangle", "dhat.equivariance"):
            assert report.get(property_id).passed, property_id

    def test_decay_series_per_spread(self):
        """One d̂ decay property per spread R = 1, 2, 3, each with bins."""
        report = _service(_ctx(c2=10)).verify_metric(_generous_record(), radius=3, budget=20, seed=8)
        for spread in (1, 2, 3):
            assert report.get(f"dhat.decay_R{spread}").bins is not None

    def test_metric_suite_needs_c2(self):
        """d̂ cannot be evaluated without C2."""
        with pytest.raises(ConfigurationError):
            _service().verify_metric(_generous_record(), radius=2, budget=10, seed=0)


class TestBolicSuite:

    def test_bolic_properties(self):
        """Weak geodesicity, midpoints, B2 and the quasi-isometry hold; B1 reports R'."""
        record = _generous_record()
        report = _service(_ctx(c2=10)).verify_bolic_geodesic(record, radius=4, budget=40, seed=6)
        for property_id in ("dhat.weak_geodesic", "dhat.midpoint", "dhat.midpoint_inequality",
                            "dhat.B2", "dhat.quasi_isometry"):
            assert report.get(property_id).passed, property_id
        table = report.tables["b1_r_prime"]
        assert sorted(table) == ["1", "2", "3"]
        for row in table.values():
            assert set(row) == {"30", "1", "1/2"}
            assert row["30"] is not None

    @pytest.mark.slow
    def test_bolic_properties_on_a_thousand_draws(self):
        """Weak geodesicity, the midpoint inequality and B2 hold on 10³ draws over B(1,6)."""
        report = _service(_ctx(c2=10)).verify_bolic_geodesic(_generous_record(), radius=6, budget=1000, seed=11)
        for property_id in ("dhat.weak_geodesic", "dhat.midpoint_inequality", "dhat.B2"):
            result = report.get(property_id)
            assert result.passed, property_id
            assert result.exhaustive or result.samples == 1000

    def test_b2_negative_radicand_counts_as_zero(self, mocker):
        """With 2d̂(x,z)² + 2d̂(y,z)² < d̂(x,y)², B2 asks 2d̂(m,z) <= 4δ2."""
        ctx = _ctx(c2=10)
        model = ctx.model
        x, y, z, m = (model.identity, model.normalize((0,)), model.normalize((1,)),
                      model.normalize((2,)))
        values = {
            frozenset((x, y)): 10, frozenset((x, z)): 2, frozenset((y, z)): 2,
            frozenset((z, m)): 3, frozenset((x, m)): 5, frozenset((y, m)): 5,
        }
        mocker.patch.object(ctx, "midpoint", return_value=m)
        mocker.patch.object(ctx, "dhat", side_effect=lambda a, b: Fraction(values[frozenset((a, b))]))
        service = _service(ctx)

        obs = service.sampler.bolic_triple_at(x, y, z)
        assert obs.extra["b2_radicand"] == -84
        assert obs.extra["b2_required_delta2"] == Fraction(3, 2)
        assert service._b2_defect(Fraction(1))(obs) == Fraction(3, 2)
        assert service._b2_defect(Fraction(2))(obs) == Fraction(3, 2)

    def test_weak_geodesic_witness_and_exact_time(self):
        """The worst t is exact: no t on a 1/8 grid needs more slack, and the witness holds a path vertex."""
        ctx = _ctx(c2=2)
        service = _service(ctx)
        model = ctx.model
        x, y = model.identity, model.normalize((0, 1) * 6)
        obs = service.sampler.weak_geodesic_at(x, y)
        path = list(ctx.bicombing.geodesic(x, y))
        assert len(obs.witness) == 3
        assert obs.witness[2] in path

        total = ctx.dhat(x, y)

        def need(t):
            return min(max(ctx.dhat(x, v) - t, ctx.dhat(v, y) - (total - t)) for v in path)

        assert need(obs.extra["t"]) == obs.value
        steps = int(8 * total) + 1
        assert all(need(min(Fraction(k, 8), total)) <= obs.value for k in range(steps + 1))

    def test_missing_delta2(self):
        """Without δ2, B2 fails with an unavailable threshold."""
        record = _generous_record(delta2=None)
        report = _service(_ctx(c2=10)).verify_bolic_geodesic(record, radius=3, budget=10, seed=6)
        assert report.get("dhat.B2").threshold == "unavailable"
        assert not report.get("dhat.B2").passed


# ===========================================================================
# 4. Pipelines
# ===========================================================================

class TestOrchestrator:

    def _run(self, **overrides) -> RunConfig:
        values = {"group": "freeprod:2,3", "delta": 1, "radius": 4, "budget": 30, "seed": 1}
        values.update(overrides)
        return RunConfig(**values)

    def test_structural_pipeline(self):
        """verify with the structural suite skips constants."""
        result = VerificationOrchestrator(_settings()).verify(self._run(), ["structural"])
        assert result["passed"]
        assert result["constants"] is None
        assert result["fineness"]["configured_delta"] == 1
        assert [r.suite for r in result["reports"]] == ["structural"]

    def test_unknown_suite(self):
        """Unknown suite names are a configuration error."""
        with pytest.raises(ConfigurationError):
            VerificationOrchestrator(_settings()).verify(self._run(), ["nonsense"])

    def test_constants_file_supplies_c2(self, tmp_path):
        """Loaded constants set d̂'s C2 before the metric suite runs."""
        path = tmp_path / "constants.json"
        path.write_text(json.dumps({"constants": _generous_record().model_dump()}), encoding="utf-8")
        result = VerificationOrchestrator(_settings()).verify(
            self._run(radius=3, budget=20), ["metric"], constants_path=path)
        assert result["reports"][0].c2 == "10"
        assert result["constants"]["c2_metric"] == "10"

    def test_estimate_pipeline_uses_estimator(self, mocker):
        """estimate wires the run configuration into ConstantsService."""
        record = _generous_record()
        estimate = mocker.patch(
            "src.services.verification_orchestrator.ConstantsService.estimate_constants",
            return_value=record,
        )
        result = VerificationOrchestrator(_settings()).estimate(self._run(), "formula")
        estimate.assert_called_once()
        args, kwargs = estimate.call_args
        assert args[:3] == (4, 30, 1)
        assert kwargs["mode"] == "formula"
        assert result["constants"]["entries"]["C2"]["value"] == "10"
        assert set(result) == {"config", "fineness", "constants", "memo"}

    def test_estimate_rejects_unknown_override(self):
        """Overrides must name known constants."""
        with pytest.raises(ConfigurationError):
            VerificationOrchestrator(_settings()).estimate(self._run(), overrides={"Q": Fraction(1)})

    def test_unexpected_error_is_wrapped(self, mocker):
        """Non-toolkit exceptions surface as VerificationError (exit code 1)."""
        mocker.patch(
            "src.services.verification_orchestrator.ConstantsService.estimate_constants",
            side_effect=RuntimeError("boom"),
        )
        from src.services.verification_orchestrator import VerificationError

        with pytest.raises(VerificationError) as exc:
            VerificationOrchestrator(_settings()).estimate(self._run())
        assert exc.value.exit_code == 1


class TestLoadConstants:

    def test_bare_record(self, tmp_path):
        """A bare ConstantsRecord file loads."""
        path = tmp_path / "record.json"
        path.write_text(_generous_record().model_dump_json(), encoding="utf-8")
        assert load_constants(path).value("C2") == 10

    def test_not_a_record(self, tmp_path):
        """Other JSON raises FormatError."""
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"hello": "world"}), encoding="utf-8")
        with pytest.raises(FormatError):
            load_constants(path)

    def test_invalid_json(self, tmp_path):
        """Broken JSON raises FormatError with a line number."""
        path = tmp_path / "broken.json"
        path.write_text("{\n", encoding="utf-8")
        with pytest.raises(FormatError) as exc:
            load_constants(path)
        assert exc.value.line is not None


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
