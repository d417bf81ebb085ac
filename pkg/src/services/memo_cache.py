"""
Memo Cache Service
Persists memoized r values as versioned JSON keyed by a hash of the model
description, δ, construction parameters and arithmetic mode.
"""

import hashlib
import json
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.exceptions import CacheMismatchError, FormatError
from src.services.metric_service import MetricContext
from src.utils.config import Settings, get_settings
from src.utils.logger import get_logger

logger = get_logger(__name__)

CACHE_FORMAT = "bolic-memo"
CACHE_VERSION = 1


class MemoCacheService:
    """Save, load, inspect and clear memo cache files."""

    def __init__(self, config: Optional[Settings] = None):
        self.config = config or get_settings()

    @staticmethod
    def cache_key(ctx: MetricContext) -> str:
        payload = {
            "model": ctx.model.describe(),
            "construction": ctx.construction.model_dump(),
            "arithmetic": ctx.arithmetic.name,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()

    def default_path(self, ctx: MetricContext) -> Path:
        return Path(self.config.cache_dir) / f"{ctx.model.kind}-{self.cache_key(ctx)[:16]}.json"

    def save(self, ctx: MetricContext, path: Optional[Path] = None) -> Path:
        """
        Write every memoized r value of the context.

        Returns:
            Path of the written cache file
        """
        path = Path(path) if path else self.default_path(ctx)
        entries: List[List[Any]] = []
        for base, target, value in ctx.r_entries():
            q = Fraction(value)
            entries.append([list(base.word), list(target.word), str(q.numerator), str(q.denominator)])
        entries.sort(key=lambda e: (len(e[0]), e[0], len(e[1]), e[1]))

        doc = {
            "format": CACHE_FORMAT,
            "version": CACHE_VERSION,
            "key": self.cache_key(ctx),
            "model": ctx.model.describe(),
            "construction": ctx.construction.model_dump(),
            "arithmetic": ctx.arithmetic.name,
            "written_at": datetime.now(timezone.utc).isoformat(),
            "entries": entries,
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc), encoding="utf-8")
        logger.info(f"💾 Saved {len(entries)} r values to {path}")
        return path

    @staticmethod
    def _read(path: Path) -> Dict[str, Any]:
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise FormatError(f"cache file is not valid JSON: {e.msg}", line=e.lineno) from e
        except OSError as e:
            raise FormatError(f"cannot read cache file {path}: {e}") from e
        if not isinstance(doc, dict) or doc.get("format") != CACHE_FORMAT:
            raise FormatError(f"{path} is not a memo cache file", field="format")
        if doc.get("version") != CACHE_VERSION:
            raise FormatError(
                f"unsupported cache version {doc.get('version')!r} (expected {CACHE_VERSION})",
                field="version",
            )
        return doc

    def load(self, ctx: MetricContext, path: Optional[Path] = None) -> int:
        """
        Seed the context with cached r values.

        Returns:
            Number of loaded entries (0 when the file does not exist)

        Raises:
            CacheMismatchError: If the cache was written for another configuration
            FormatError: If the file is malformed
        """
        path = Path(path) if path else self.default_path(ctx)
        if not path.exists():
            logger.debug(f"No memo cache at {path}")
            return 0
        doc = self._read(path)
        expected = self.cache_key(ctx)
        if doc.get("key") != expected:
            raise CacheMismatchError(
                f"cache {path} was written for a different model configuration",
                {"expected": expected, "found": doc.get("key"), "cached_model": doc.get("model")},
            )
        model = ctx.model
        for k, entry in enumerate(doc.get("entries", [])):
            try:
                base_word, target_word, num, den = entry
                value = Fraction(int(num), int(den))
            except (ValueError, TypeError, ZeroDivisionError) as e:
                raise FormatError(f"bad cache entry {entry!r}", field=f"entries[{k}]") from e
            ctx.seed_r(model.normalize(base_word), model.normalize(target_word), value)
        count = len(doc.get("entries", []))
        logger.info(f"📂 Loaded {count} r values from {path}")
        return count

    def inspect(self, path: Path) -> Dict[str, Any]:
        """Summary of a cache file (no model needed)."""
        doc = self._read(Path(path))
        return {
            "path": str(path),
            "format": doc["format"],
            "version": doc["version"],
            "key": doc.get("key"),
            "model": doc.get("model"),
            "construction": doc.get("construction"),
            "arithmetic": doc.get("arithmetic"),
            "written_at": doc.get("written_at"),
            "entries": len(doc.get("entries", [])),
        }

    def list_files(self, cache_dir: Optional[Path] = None) -> List[Path]:
        directory = Path(cache_dir or self.config.cache_dir)
        if not directory.is_dir():
            return []
        return sorted(directory.glob("*.json"))

    def clear(self, cache_dir: Optional[Path] = None) -> int:
        """Delete every memo cache file under the cache directory; other files stay."""
        removed = 0
        for path in self.list_files(cache_dir):
            try:
                self._read(path)
            except FormatError:
                logger.warning(f"⚠️ Skipping {path}: not a memo cache file")
                continue
            path.unlink()
            removed += 1
        logger.info(f"🗑️ Removed {removed} cache file(s)")
        return removed
