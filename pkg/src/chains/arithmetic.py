"""
Number modes for chain coefficients and metric values.

``exact`` uses Fraction (arbitrary precision); ``float`` uses binary doubles
for speed scans and compares with a tolerance. Exactness assertions only
hold in exact mode.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Number = Union[Fraction, float]


@dataclass(frozen=True)
class Arithmetic:
    """Coefficient field used by chains and the r recursion."""

    name: str
    tolerance: float = 0.0

    @property
    def exact(self) -> bool:
        return self.name == "exact"

    @property
    def zero(self) -> Number:
        return Fraction(0) if self.exact else 0.0

    @property
    def one(self) -> Number:
        return Fraction(1) if self.exact else 1.0

    def ratio(self, numerator: int, denominator: int) -> Number:
        if self.exact:
            return Fraction(numerator, denominator)
        return numerator / denominator

    def convert(self, value: Union[int, Fraction, float]) -> Number:
        if self.exact:
            return Fraction(value)
        return float(value)

    def leq(self, a: Number, b: Number) -> bool:
        """a <= b, up to tolerance in float mode."""
        if self.exact:
            return a <= b
        return a <= b + self.tolerance

    def equal(self, a: Number, b: Number) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= self.tolerance


EXACT = Arithmetic("exact")


def get_arithmetic(name: str = "exact", tolerance: float = 1e-9) -> Arithmetic:
    """
    Args:
        name: "exact" or "float"
        tolerance: Comparison tolerance for float mode

    Raises:
        ValueError: If the mode name is unknown
    """
    if name == "exact":
        return EXACT
    if name == "float":
        return Arithmetic("float", tolerance)
    raise ValueError(f"Unknown arithmetic mode: {name} (use exact or float)")
