"""
Configuration management using Pydantic Settings
Environment overrides (BOLIC_*) and an optional .env file for tool-wide
settings, plus the per-run RunConfig that every output embeds.
"""

import json
import os
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.exceptions import ConfigurationError


class Settings(BaseSettings):
    """
    Tool-wide settings loaded from environment variables.
    Every field can be overridden with BOLIC_<FIELD_NAME>.
    """

    model_config = SettingsConfigDict(
        env_prefix="BOLIC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # Logging Configuration
    log_level: str = Field(
        default="INFO",
        description="Logging level: DEBUG, INFO, WARNING, ERROR, CRITICAL"
    )

    # Resource caps
    max_ball_size: int = Field(
        default=5_000_000,
        description="Largest ball enumeration allowed before BudgetExceeded"
    )
    max_memo_entries: int = Field(
        default=10_000_000,
        description="Largest number of memoized r / star-average values"
    )
    geodesic_cap: int = Field(
        default=64,
        description="Alternative geodesics enumerated per pair in fineness checks"
    )

    # Execution
    workers: int = Field(
        default_factory=lambda: os.cpu_count() or 1,
        description="Worker threads for batch evaluation"
    )
    cache_dir: Path = Field(
        default=Path(".bolic_cache"),
        description="Directory holding memo cache files"
    )
    debug_assertions: bool = Field(
        default=True,
        description="Assert convexity/support of every f evaluation"
    )
    show_progress: bool = Field(
        default=False,
        description="Show tqdm progress bars over sample batches"
    )
    reference_max_distance: int = Field(
        default=12,
        description="Largest d(a,b) handed to the memoization-free evaluator inside suites"
    )
    float_tolerance: float = Field(
        default=1e-9,
        description="Tolerance for assertions in float arithmetic mode"
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is valid"""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v_upper

    @field_validator("max_ball_size", "max_memo_entries", "geodesic_cap", "workers")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be a positive integer")
        return v


# Singleton instance
_settings: Settings | None = None


def get_settings() -> Settings:
    """
    Get or create the settings singleton instance.

    Returns:
        Settings instance

    Raises:
        ConfigurationError: If an environment override is invalid
    """
    global _settings

    if _settings is None:
        try:
            _settings = Settings()
        except ValidationError as e:
            raise ConfigurationError(f"Invalid BOLIC_* settings: {e}") from e

    return _settings


def reset_settings():
    """
    Reset the settings singleton (useful for testing)
    """
    global _settings
    _settings = None


class ConstructionParameters(BaseModel):
    """
    Radii used by the chain constructions, in units of delta.
    Only fault-injection runs change these.
    """

    model_config = ConfigDict(frozen=True)

    star_radius_factor: int = Field(default=7, ge=1)
    projection_step_factor: int = Field(default=10, ge=1)

    @property
    def is_default(self) -> bool:
        return self.star_radius_factor == 7 and self.projection_step_factor == 10


class RunConfig(BaseModel):
    """
    Fully resolved configuration of one CLI run.
    Validated before any computation starts.
    """

    model_config = ConfigDict(extra="forbid")

    group: str = Field(..., description="free:<rank> | freeprod:<k1,k2,...> | table:<path>")
    generator_order: Optional[List[str]] = Field(
        default=None,
        description="Generator labels in ShortLex order (default: model order)"
    )
    delta: Optional[int] = Field(default=None, description="Fineness constant (>= 1)")
    radius: int = Field(default=6, ge=0)
    budget: int = Field(default=1000, ge=0)
    seed: int = 0
    arithmetic: Literal["exact", "float"] = "exact"
    c2_source: Literal["empirical", "formula", "user"] = "empirical"
    c2_value: Optional[str] = None
    c2_margin: str = "1"
    cache_path: Optional[Path] = None
    output_path: Optional[Path] = None
    csv_path: Optional[Path] = None
    construction: ConstructionParameters = Field(default_factory=ConstructionParameters)
    workers: Optional[int] = Field(default=None, ge=1)

    @field_validator("group")
    @classmethod
    def validate_group(cls, v: str) -> str:
        kind = v.split(":", 1)[0].strip().lower()
        if kind not in ("free", "freeprod", "table"):
            raise ValueError(f"unknown group kind '{kind}' (use free, freeprod or table)")
        return v.strip()

    @field_validator("delta")
    @classmethod
    def validate_delta(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError("delta must be a positive integer")
        return v

    @field_validator("c2_value", "c2_margin")
    @classmethod
    def validate_rational(cls, v: Optional[str]) -> Optional[str]:
        if v is None:
            return v
        try:
            value = Fraction(v)
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"not a rational number: {v}") from e
        if value < 0:
            raise ValueError("must be non-negative")
        return str(value)

    @model_validator(mode="after")
    def resolve_delta(self) -> "RunConfig":
        if self.delta is None:
            if self.group.lower().startswith("free:"):
                self.delta = 1
            else:
                raise ValueError("delta must be supplied for non-free groups")
        if self.c2_source == "user" and self.c2_value is None:
            raise ValueError("c2_source 'user' requires c2_value")
        return self

    @property
    def c2_user(self) -> Optional[Fraction]:
        return Fraction(self.c2_value) if self.c2_value is not None else None

    @property
    def c2_safety_margin(self) -> Fraction:
        return Fraction(self.c2_margin)

    def resolved(self) -> Dict[str, Any]:
        """JSON-able dict of every field, as embedded in outputs."""
        return json.loads(self.model_dump_json())

    @classmethod
    def build(cls, file_path: Optional[Path] = None, **overrides: Any) -> "RunConfig":
        """
        Merge a JSON config file with explicit overrides (None values ignored).

        Raises:
            ConfigurationError: If the file is unreadable or the result is invalid
        """
        data: Dict[str, Any] = {}
        if file_path is not None:
            try:
                data = json.loads(Path(file_path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigurationError(f"Cannot read config file {file_path}: {e}") from e
            if not isinstance(data, dict):
                raise ConfigurationError(f"Config file {file_path} must hold a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**data)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid run configuration: {e}") from e
