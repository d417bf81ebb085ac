"""
Input validation utilities for group specs, words, and rational constants
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from src.groups.elements import GeneratorSet
from src.exceptions import ConfigurationError


class ValidationError(ConfigurationError):
    """Custom exception for validation errors"""
    pass


@dataclass(frozen=True)
class GroupSpec:
    """Parsed form of free:<rank> | freeprod:<k1,k2,...> | table:<path>"""

    kind: str
    rank: Optional[int] = None
    orders: Tuple[int, ...] = ()
    path: Optional[Path] = None


class GroupSpecValidator:
    """Validator for --group specifications"""

    FREE_REGEX = re.compile(r'^free:(\d+)$', re.IGNORECASE)
    FREEPROD_REGEX = re.compile(r'^freeprod:(\d+(?:\s*,\s*\d+)*)$', re.IGNORECASE)
    TABLE_REGEX = re.compile(r'^table:(.+)$', re.IGNORECASE)

    @classmethod
    def validate(cls, spec: str) -> GroupSpec:
        """
        Parse a group specification.

        Args:
            spec: e.g. "free:2", "freeprod:2,3", "table:ball.json"

        Returns:
            GroupSpec

        Raises:
            ValidationError: If the spec is malformed
        """
        if not spec:
            raise ValidationError("Group spec cannot be empty")

        spec = spec.strip()

        match = cls.FREE_REGEX.match(spec)
        if match:
            rank = int(match.group(1))
            if rank < 1:
                raise ValidationError(f"Free group rank must be >= 1: {spec}")
            return GroupSpec(kind="free", rank=rank)

        match = cls.FREEPROD_REGEX.match(spec)
        if match:
            orders = tuple(int(k) for k in match.group(1).split(","))
            if any(k < 2 for k in orders):
                raise ValidationError(f"Cyclic factor orders must be >= 2: {spec}")
            return GroupSpec(kind="freeprod", orders=orders)

        match = cls.TABLE_REGEX.match(spec)
        if match:
            return GroupSpec(kind="table", path=Path(match.group(1).strip()))

        raise ValidationError(
            f"Invalid group spec: {spec}. "
            "Use free:<rank>, freeprod:<k1,k2,...> or table:<path>."
        )


class WordParser:
    """
    Parser for words typed on the command line.

    Grammar: a word is a sequence of generator labels, each optionally
    followed by an inverse suffix ``^-1``, ``^{-1}`` or ``'``. Labels may be
    separated by whitespace or concatenated (longest label wins). ``1``
    denotes the identity.
    """

    INVERSE_SUFFIXES = ("^{-1}", "^-1", "'")

    def __init__(self, generators: GeneratorSet):
        self.generators = generators
        self._tokens: Dict[str, int] = {}
        for i, label in enumerate(generators.symbols):
            self._tokens[label] = i
        for i, label in enumerate(generators.symbols):
            for suffix in self.INVERSE_SUFFIXES:
                self._tokens.setdefault(label + suffix, generators.inverse_of[i])
            if label.endswith("^-1"):
                self._tokens.setdefault(label[:-3] + "^{-1}", i)
        self._by_length = sorted(self._tokens, key=len, reverse=True)

    def parse(self, text: str) -> List[int]:
        """
        Parse a word into generator indices.

        Raises:
            ValidationError: If some part of the text is not a label
        """
        if text is None:
            raise ValidationError("Word cannot be empty (use 1 for the identity)")
        letters: List[int] = []
        pos = 0
        while pos < len(text):
            if text[pos].isspace():
                pos += 1
                continue
            token = next((t for t in self._by_length if text.startswith(t, pos)), None)
            if token is None:
                if text[pos] == "1":
                    pos += 1
                    continue
                raise ValidationError(
                    f"Invalid word '{text}': no generator label at position {pos} "
                    f"(labels: {', '.join(self.generators.symbols)})"
                )
            letters.append(self._tokens[token])
            pos += len(token)
        return letters


class RationalValidator:
    """Validator for exact rational constants such as C2=5/2"""

    @classmethod
    def validate(cls, text: str, name: str = "value") -> Fraction:
        """
        Parse a non-negative rational ("3", "5/2", "0.75").

        Raises:
            ValidationError: If the text is not a non-negative rational
        """
        if text is None or not str(text).strip():
            raise ValidationError(f"{name} cannot be empty")
        try:
            value = Fraction(str(text).strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValidationError(f"Invalid rational for {name}: {text}") from e
        if value < 0:
            raise ValidationError(f"{name} must be non-negative: {text}")
        return value

    @classmethod
    def validate_assignment(cls, text: str, allowed: Iterable[str]) -> Tuple[str, Fraction]:
        """Parse NAME=value, with NAME one of ``allowed``."""
        allowed = list(allowed)
        if "=" not in text:
            raise ValidationError(f"Expected NAME=value, got '{text}'")
        name, _, value = text.partition("=")
        name = name.strip()
        if name not in allowed:
            raise ValidationError(f"Unknown constant '{name}' (valid: {', '.join(allowed)})")
        return name, cls.validate(value, name)


def validate_group_spec(spec: str) -> GroupSpec:
    """Convenience function for group spec validation"""
    return GroupSpecValidator.validate(spec)


def parse_word(text: str, generators: GeneratorSet) -> List[int]:
    """Convenience function for word parsing"""
    return WordParser(generators).parse(text)


def parse_rational(text: str, name: str = "value") -> Fraction:
    """Convenience function for rational validation"""
    return RationalValidator.validate(text, name)
