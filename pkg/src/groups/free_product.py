"""
Free products of finite cyclic groups with syllable normal forms
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

from src.groups.base_model import AlgebraicGroupModel
from src.groups.elements import GeneratorSet, Word
from src.exceptions import DomainError

FACTOR_LABELS = "stuvwxyz"


def _factor_label(i: int) -> str:
    return FACTOR_LABELS[i] if i < len(FACTOR_LABELS) else f"g{i}"


class FreeProductFiniteCyclic(AlgebraicGroupModel):
    """
    Z/k1 * Z/k2 * ... * Z/kn.

    An order-2 factor contributes one self-inverse generator; an order-k
    factor (k >= 3) contributes a generator and its inverse. Elements are
    alternating syllable sequences, each syllable t^e written with
    min(e, k - e) letters, so the canonical word length is the word norm.
    """

    kind = "freeprod"

    def __init__(
        self,
        orders: Sequence[int],
        generator_order: Optional[Sequence[str]] = None,
        delta: int = 1,
        max_ball_size: int = 5_000_000,
    ):
        orders = tuple(int(k) for k in orders)
        if not orders:
            raise DomainError("a free product needs at least one factor")
        for k in orders:
            if k < 2:
                raise DomainError(f"cyclic factor orders must be >= 2, got {k}")

        symbols: List[str] = []
        inverse: List[int] = []
        letters: List[Tuple[int, int]] = []  # generator index -> (factor, +1/-1)
        for i, k in enumerate(orders):
            label = _factor_label(i)
            if k == 2:
                symbols.append(label)
                inverse.append(len(symbols) - 1)
                letters.append((i, 1))
            else:
                base = len(symbols)
                symbols.extend([label, f"{label}^-1"])
                inverse.extend([base + 1, base])
                letters.extend([(i, 1), (i, -1)])

        generators = GeneratorSet(tuple(symbols), tuple(inverse))
        if generator_order is not None:
            generators, perm = generators.reordered(generator_order)
            reordered: List[Tuple[int, int]] = [(0, 0)] * len(letters)
            for old, new in enumerate(perm):
                reordered[new] = letters[old]
            letters = reordered

        super().__init__(generators, delta, max_ball_size)
        self.orders = orders
        self._letters = tuple(letters)
        self._positive: Dict[int, int] = {}
        self._negative: Dict[int, int] = {}
        for index, (factor, sign) in enumerate(self._letters):
            (self._positive if sign > 0 else self._negative)[factor] = index

    def _syllable_word(self, factor: int, exponent: int) -> Word:
        k = self.orders[factor]
        up = self._positive[factor]
        down = self._negative.get(factor, up)
        if exponent < k - exponent:
            return (up,) * exponent
        if exponent > k - exponent:
            return (down,) * (k - exponent)
        # t^(k/2): both spellings are geodesic, ShortLex picks the earlier letter
        return (min(up, down),) * exponent

    def _reduce(self, raw: Sequence[int]) -> Word:
        syllables: List[List[int]] = []
        for letter in raw:
            factor, sign = self._letters[letter]
            if syllables and syllables[-1][0] == factor:
                syllables[-1][1] = (syllables[-1][1] + sign) % self.orders[factor]
                if syllables[-1][1] == 0:
                    syllables.pop()
            else:
                syllables.append([factor, sign % self.orders[factor]])
        word: List[int] = []
        for factor, exponent in syllables:
            word.extend(self._syllable_word(factor, exponent))
        return tuple(word)

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "orders": list(self.orders),
            "generators": list(self.generators.symbols),
            "delta": self.delta,
        }
