"""
Sparse 0-chains with rational coefficients

A Chain0 is a finitely supported map from group elements to numbers
(Fraction in exact mode, float in float mode). Zero coefficients are never
stored and terms are kept sorted by element id. Ids are fixed by the model
(ShortLex rank or table position), so iteration and JSON serialization do
not depend on the order elements were first computed.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

from src.chains.arithmetic import Number
from src.groups.base_model import GroupModel
from src.groups.elements import GroupElement
from src.exceptions import DomainError, FormatError


class Chain0:
    """Immutable sparse 0-chain."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable[Tuple[GroupElement, Number]] = ()):
        acc: Dict[GroupElement, Number] = {}
        for g, c in terms:
            if c == 0:
                continue
            total = acc.get(g, 0) + c
            if total == 0:
                del acc[g]
            else:
                acc[g] = total
        self._terms: Tuple[Tuple[GroupElement, Number], ...] = tuple(
            sorted(acc.items(), key=lambda term: term[0].id)
        )

    @classmethod
    def vertex(cls, g: GroupElement, coefficient: Number = Fraction(1)) -> "Chain0":
        return cls(((g, coefficient),))

    # ------------------------------------------------------------------ #
    # Accessors
    # ------------------------------------------------------------------ #

    def items(self) -> Tuple[Tuple[GroupElement, Number], ...]:
        return self._terms

    @property
    def support(self) -> Tuple[GroupElement, ...]:
        return tuple(g for g, _ in self._terms)

    def support_set(self) -> FrozenSet[GroupElement]:
        return frozenset(g for g, _ in self._terms)

    def coefficient(self, g: GroupElement) -> Number:
        for h, c in self._terms:
            if h == g:
                return c
        return 0

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[Tuple[GroupElement, Number]]:
        return iter(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Chain0):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(self._terms)

    def __repr__(self) -> str:
        body = ", ".join(f"{g.id}: {c}" for g, c in self._terms[:6])
        more = ", ..." if len(self._terms) > 6 else ""
        return f"Chain0({{{body}{more}}})"

    # ------------------------------------------------------------------ #
    # Linear structure
    # ------------------------------------------------------------------ #

    def __add__(self, other: "Chain0") -> "Chain0":
        return Chain0(self._terms + other._terms)

    def __sub__(self, other: "Chain0") -> "Chain0":
        return Chain0(self._terms + tuple((g, -c) for g, c in other._terms))

    def __neg__(self) -> "Chain0":
        return Chain0((g, -c) for g, c in self._terms)

    def __mul__(self, scalar: Number) -> "Chain0":
        if scalar == 0:
            return Chain0()
        return Chain0((g, scalar * c) for g, c in self._terms)

    __rmul__ = __mul__

    @property
    def l1(self) -> Number:
        return sum((abs(c) for _, c in self._terms), Fraction(0))

    @property
    def augmentation(self) -> Number:
        """ε(z): sum of coefficients."""
        return sum((c for _, c in self._terms), Fraction(0))

    def translate(self, model: GroupModel, g: GroupElement) -> "Chain0":
        """Left translate g·z."""
        if g.is_identity:
            return self
        return Chain0((model.multiply(g, h), c) for h, c in self._terms)

    # ------------------------------------------------------------------ #
    # Serialization: [[id, "num", "den"], ...]
    # ------------------------------------------------------------------ #

    def to_json(self) -> List[List]:
        out = []
        for g, c in self._terms:
            q = Fraction(c)
            out.append([g.id, str(q.numerator), str(q.denominator)])
        return out

    @classmethod
    def from_json(cls, data: List[List], model: GroupModel, exact: bool = True) -> "Chain0":
        terms = []
        for k, entry in enumerate(data):
            try:
                element_id, num, den = entry
                q = Fraction(int(num), int(den))
                g = model.element(int(element_id))
            except (ValueError, TypeError, ZeroDivisionError, DomainError) as e:
                raise FormatError(f"bad chain term {entry!r}", field=f"chain[{k}]") from e
            terms.append((g, q if exact else float(q)))
        return cls(terms)


def combine(weighted: Iterable[Tuple[Number, Chain0]]) -> Chain0:
    """Σ αᵢ·zᵢ in a single accumulation pass."""
    return Chain0((g, alpha * c) for alpha, z in weighted for g, c in z.items())


@dataclass(frozen=True)
class ChainMeasure:
    """Norm statistics of a chain"""

    l1: Number
    augmentation: Number
    support: Tuple[GroupElement, ...]
    diameter: int


def measure(model: GroupModel, chain: Chain0) -> ChainMeasure:
    """
    ℓ¹ norm, augmentation, support and support diameter.

    The diameter is the largest pairwise distance over the support
    (0 for empty or singleton chains).
    """
    support = chain.support
    diameter = 0
    for i, g in enumerate(support):
        for h in support[i + 1:]:
            diameter = max(diameter, model.distance(g, h))
    return ChainMeasure(chain.l1, chain.augmentation, support, diameter)


def star(
    model: GroupModel,
    chain: Chain0,
    radius_factor: int = 7,
    omega: Optional[int] = None,
) -> Chain0:
    """
    Linear extension of star(x) = (1/ω) Σ_{y ∈ B(x, radius_factor·δ)} y.

    Args:
        model: Group model (supplies δ and balls)
        chain: Input chain
        radius_factor: Star radius in units of δ
        omega: |B(1, radius)| if already known

    Raises:
        OutOfLoadedBall: If a table model lacks a needed ball
    """
    radius = radius_factor * model.delta
    if omega is None:
        omega = model.ball_size(radius)
    return Chain0(
        (y, c / omega) for x, c in chain.items() for y in model.ball(x, radius)
    )


def jordan_decompose(chain: Chain0) -> Tuple[Chain0, Chain0]:
    """Split z = plus − minus with non-negative parts of disjoint support."""
    plus = Chain0((g, c) for g, c in chain.items() if c > 0)
    minus = Chain0((g, -c) for g, c in chain.items() if c < 0)
    return plus, minus
