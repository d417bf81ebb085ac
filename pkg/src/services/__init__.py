"""
Business logic and service layer
"""

from src.services.bicombing_service import BicombingService, FinenessReport, GeodesicPath
from src.services.metric_service import MetricContext, MidpointResult
from src.services.reference_evaluator import ReferenceEvaluator
from src.services.memo_cache import MemoCacheService
from src.services.property_sampler import Observation, PropertySampler
from src.services.constants_service import (
    CONSTANT_NAMES,
    ConstantEntry,
    ConstantsRecord,
    ConstantsService,
)
from src.services.verification_service import (
    SUITES,
    PropertyResult,
    VerificationReport,
    VerificationService,
)
from src.services.verification_orchestrator import (
    VerificationError,
    VerificationOrchestrator,
    load_constants,
)

__all__ = [
    # Bicombing
    "BicombingService",
    "FinenessReport",
    "GeodesicPath",
    # Metric core
    "MetricContext",
    "MidpointResult",
    "ReferenceEvaluator",
    "MemoCacheService",
    # Constants
    "Observation",
    "PropertySampler",
    "CONSTANT_NAMES",
    "ConstantEntry",
    "ConstantsRecord",
    "ConstantsService",
    # Verification
    "SUITES",
    "PropertyResult",
    "VerificationReport",
    "VerificationService",
    # Pipeline orchestrator
    "VerificationError",
    "VerificationOrchestrator",
    "load_constants",
]
