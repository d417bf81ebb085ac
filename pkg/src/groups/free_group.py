"""
Free group of finite rank with free-reduction normal forms
"""

from typing import Any, Dict, List, Optional, Sequence

from src.groups.base_model import AlgebraicGroupModel
from src.groups.elements import GeneratorSet, Word
from src.exceptions import DomainError

LETTERS = "abcdefghijklmnopqrstuvwxyz"


def free_generators(rank: int) -> GeneratorSet:
    """Generators a, a^-1, b, b^-1, ... in that default order."""
    if rank < 1:
        raise DomainError(f"free group rank must be >= 1, got {rank}")
    symbols: List[str] = []
    inverse: List[int] = []
    for i in range(rank):
        label = LETTERS[i] if i < len(LETTERS) else f"x{i}"
        symbols.extend([label, f"{label}^-1"])
        inverse.extend([2 * i + 1, 2 * i])
    return GeneratorSet(tuple(symbols), tuple(inverse))


class FreeGroup(AlgebraicGroupModel):
    """
    Free group F_rank. The freely reduced word is the unique geodesic word,
    so the Cayley graph is a tree and delta = 1 is exact.
    """

    kind = "free"
    _run_limit = 1

    def __init__(
        self,
        rank: int,
        generator_order: Optional[Sequence[str]] = None,
        delta: int = 1,
        max_ball_size: int = 5_000_000,
    ):
        generators = free_generators(rank)
        if generator_order is not None:
            generators, _ = generators.reordered(generator_order)
        super().__init__(generators, delta, max_ball_size)
        self.rank = rank

    def _reduce(self, raw: Sequence[int]) -> Word:
        inverse_of = self.generators.inverse_of
        stack: List[int] = []
        for letter in raw:
            if stack and stack[-1] == inverse_of[letter]:
                stack.pop()
            else:
                stack.append(letter)
        return tuple(stack)

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "rank": self.rank,
            "generators": list(self.generators.symbols),
            "delta": self.delta,
        }
