"""
Verification Orchestrator
Combines the group model, MetricContext, memo cache, ConstantsService and
VerificationService into the pipelines behind the estimate and verify
commands.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError as PydanticValidationError

from src.chains.arithmetic import get_arithmetic
from src.exceptions import BolicError, ConfigurationError, FormatError
from src.groups.model_factory import get_group_model
from src.services.bicombing_service import FinenessReport
from src.services.constants_service import CONSTANT_NAMES, ConstantsRecord, ConstantsService
from src.services.memo_cache import MemoCacheService
from src.services.metric_service import MetricContext
from src.services.verification_service import SUITES, VerificationReport, VerificationService
from src.utils.config import RunConfig, Settings, get_settings
from src.utils.logger import get_logger

logger = get_logger(__name__)

FINENESS_RADIUS = 4


class VerificationError(BolicError):
    """Raised when a pipeline step fails unexpectedly"""
    exit_code = 1


def load_constants(path: Path) -> ConstantsRecord:
    """
    Read a ConstantsRecord from a bare record or an estimate output document.

    Raises:
        FormatError: If the file is not a constants record
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"constants file is not valid JSON: {e.msg}", line=e.lineno) from e
    except OSError as e:
        raise FormatError(f"cannot read constants file {path}: {e}") from e
    if isinstance(doc, dict) and "constants" in doc:
        doc = doc["constants"]
    try:
        return ConstantsRecord.model_validate(doc)
    except PydanticValidationError as e:
        raise FormatError(f"{path} is not a constants record: {e}", field="constants") from e


class VerificationOrchestrator:
    """
    Estimate and verify pipelines.

    Estimate:
    1. Build the group model
    2. Create the metric context (loading the memo cache if configured)
    3. Check δ-fineness of the generating set on a small ball
    4. Estimate the constants
    5. Save the memo cache

    Verify runs steps 1-3, takes constants from a file or estimates them,
    runs the selected suites and saves the memo cache.
    """

    def __init__(self, config: Optional[Settings] = None):
        self.config = config or get_settings()
        self.cache = MemoCacheService(config=self.config)

    def build_context(self, run: RunConfig) -> MetricContext:
        """Model + arithmetic + construction of a run, with the memo cache loaded."""
        if run.workers is not None:
            self.config = self.config.model_copy(update={"workers": run.workers})
            self.cache = MemoCacheService(config=self.config)
        model = get_group_model(run.group, run.delta, run.generator_order, self.config)
        arithmetic = get_arithmetic(run.arithmetic, self.config.float_tolerance)
        c2 = run.c2_user if run.c2_source == "user" else None
        ctx = MetricContext(model, c2, arithmetic, run.construction, self.config)
        if run.cache_path is not None:
            self.cache.load(ctx, run.cache_path)
        return ctx

    def _fineness(self, ctx: MetricContext, run: RunConfig) -> FinenessReport:
        radius = min(run.radius, FINENESS_RADIUS)
        report = ctx.bicombing.check_delta_fineness(radius, run.budget, run.seed)
        if not report.consistent:
            logger.warning(f"⚠️ δ = {ctx.delta} looks too small: {report.note}, "
                           f"defect {report.max_defect}")
        return report

    def _save_cache(self, ctx: MetricContext, run: RunConfig) -> None:
        if run.cache_path is not None:
            self.cache.save(ctx, run.cache_path)

    def _estimate(self, ctx: MetricContext, run: RunConfig, mode: str,
                  overrides: Optional[Dict] = None) -> ConstantsRecord:
        service = ConstantsService(ctx, self.config)
        return service.estimate_constants(
            run.radius, run.budget, run.seed, mode=mode, c2_source=run.c2_source,
            c2_user=run.c2_user, c2_margin=run.c2_safety_margin, overrides=overrides,
        )

    def estimate(self, run: RunConfig, mode: str = "empirical",
                 overrides: Optional[Dict] = None) -> Dict[str, Any]:
        """
        Run the estimate pipeline.

        Returns:
            Dict with keys: config, fineness, constants, memo

        Raises:
            BolicError: Domain, configuration or resource errors (unchanged)
            VerificationError: If a step fails unexpectedly
        """
        unknown = set(overrides or {}) - set(CONSTANT_NAMES)
        if unknown:
            raise ConfigurationError(f"unknown constants: {', '.join(sorted(unknown))}")
        logger.info(f"🚀 Starting constant estimation for {run.group}")
        try:
            logger.info("── Step 1/4: Building model and metric context")
            ctx = self.build_context(run)

            logger.info("── Step 2/4: Checking δ-fineness")
            fineness = self._fineness(ctx, run)

            logger.info(f"── Step 3/4: Estimating constants ({mode})")
            record = self._estimate(ctx, run, mode, overrides)

            logger.info("── Step 4/4: Saving memo cache")
            self._save_cache(ctx, run)

            logger.info("🎉 Estimation finished")
            return {
                "config": run.resolved(),
                "fineness": fineness.model_dump(),
                "constants": record.model_dump(),
                "memo": ctx.memo_sizes,
            }
        except BolicError:
            raise
        except Exception as exc:
            logger.error(f"❌ Estimation failed: {exc}")
            raise VerificationError(str(exc)) from exc

    def verify(
        self,
        run: RunConfig,
        suites: Sequence[str] = SUITES,
        constants_path: Optional[Path] = None,
    ) -> Dict[str, Any]:
        """
        Run the verify pipeline.

        Returns:
            Dict with keys: config, fineness, constants, reports (VerificationReport
            per suite), passed

        Raises:
            ConfigurationError: If a suite name is unknown
            BolicError: Domain, configuration or resource errors (unchanged)
            VerificationError: If a step fails unexpectedly
        """
        unknown = [s for s in suites if s not in SUITES]
        if unknown:
            raise ConfigurationError(f"unknown suite(s): {', '.join(unknown)}; choose from {', '.join(SUITES)}")
        logger.info(f"🚀 Starting verification of {run.group}: {', '.join(suites)}")
        try:
            logger.info("── Step 1/5: Building model and metric context")
            ctx = self.build_context(run)

            logger.info("── Step 2/5: Checking δ-fineness")
            fineness = self._fineness(ctx, run)

            record: Optional[ConstantsRecord] = None
            if any(s != "structural" for s in suites):
                if constants_path is not None:
                    logger.info(f"── Step 3/5: Loading constants from {constants_path}")
                    record = load_constants(constants_path)
                    self._apply_c2(ctx, record, run)
                else:
                    logger.info("── Step 3/5: Estimating constants")
                    record = self._estimate(ctx, run, "empirical")
            else:
                logger.info("── Step 3/5: Skipping constants (structural suite only)")

            logger.info("── Step 4/5: Running suites")
            service = VerificationService(ctx, self.config)
            reports: List[VerificationReport] = []
            for suite in suites:
                reports.append(self._run_suite(service, suite, record, run))

            logger.info("── Step 5/5: Saving memo cache")
            self._save_cache(ctx, run)

            passed = all(r.passed for r in reports)
            if passed:
                logger.info("🎉 Every property passed")
            else:
                failed = [f"{r.suite}:{p}" for r in reports for p in r.failures]
                logger.warning(f"⚠️ Failed properties: {', '.join(failed)}")
            return {
                "config": run.resolved(),
                "fineness": fineness.model_dump(),
                "constants": record.model_dump() if record else None,
                "reports": reports,
                "passed": passed,
            }
        except BolicError:
            raise
        except Exception as exc:
            logger.error(f"❌ Verification failed: {exc}")
            raise VerificationError(str(exc)) from exc

    @staticmethod
    def _apply_c2(ctx: MetricContext, record: ConstantsRecord, run: RunConfig) -> None:
        if run.c2_source == "user":
            return
        if record.metric_c2 is None:
            raise ConfigurationError("constants record carries no metric C2")
        ctx.c2 = ctx.arithmetic.convert(record.metric_c2)

    @staticmethod
    def _run_suite(
        service: VerificationService,
        suite: str,
        record: Optional[ConstantsRecord],
        run: RunConfig,
    ) -> VerificationReport:
        if suite == "structural":
            return service.verify_structural(run.radius, run.budget, run.seed)
        if suite == "r":
            return service.verify_r_properties(record, run.radius, run.budget, run.seed)
        if suite == "metric":
            return service.verify_metric(record, run.radius, run.budget, run.seed)
        return service.verify_bolic_geodesic(record, run.radius, run.budget, run.seed)
