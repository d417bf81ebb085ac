"""
Generators, interned group elements and the interning table
"""

import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from src.exceptions import BudgetExceeded, FormatError

Word = Tuple[int, ...]


@dataclass(frozen=True)
class GeneratorSet:
    """
    Ordered, symmetric generating set.

    ``symbols[i]`` is the label of generator i and ``inverse_of[i]`` the index
    of its formal inverse (possibly i itself). The order of ``symbols`` is the
    ShortLex order.
    """

    symbols: Tuple[str, ...]
    inverse_of: Tuple[int, ...]

    def __post_init__(self):
        n = len(self.symbols)
        if len(self.inverse_of) != n:
            raise FormatError("inverse_of must be parallel to symbols", field="generators")
        if len(set(self.symbols)) != n:
            raise FormatError("generator labels must be distinct", field="generators")
        for i, j in enumerate(self.inverse_of):
            if not 0 <= j < n:
                raise FormatError(f"inverse index {j} out of range", field=f"generators[{i}]")
            if self.inverse_of[j] != i:
                raise FormatError(
                    f"inverse pairing is not an involution at index {i}",
                    field=f"generators[{i}]",
                )

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, label: str) -> int:
        return self.symbols.index(label)

    def invert_word(self, word: Sequence[int]) -> Word:
        """Formal inverse: reverse and invert each letter."""
        return tuple(self.inverse_of[i] for i in reversed(word))

    def render(self, word: Sequence[int]) -> str:
        """Space-separated labels; ``1`` for the empty word."""
        if not word:
            return "1"
        return " ".join(self.symbols[i] for i in word)

    def reordered(self, order: Sequence[str]) -> Tuple["GeneratorSet", List[int]]:
        """
        Return the same generating set in a new ShortLex order.

        Args:
            order: Every label exactly once

        Returns:
            (new GeneratorSet, permutation old index -> new index)
        """
        if sorted(order) != sorted(self.symbols):
            raise FormatError(
                f"generator order {list(order)} must list each of {list(self.symbols)} once",
                field="generator_order",
            )
        new_index = {label: k for k, label in enumerate(order)}
        perm = [new_index[label] for label in self.symbols]
        inverse = [0] * len(order)
        for old, new in enumerate(perm):
            inverse[new] = perm[self.inverse_of[old]]
        return GeneratorSet(tuple(order), tuple(inverse)), perm


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Interned group element: equal iff ids are equal."""

    id: int
    word: Word = field(repr=False)

    def __eq__(self, other):
        return isinstance(other, GroupElement) and other.id == self.id

    def __hash__(self):
        return self.id

    def __lt__(self, other: "GroupElement") -> bool:
        return self.id < other.id

    def __len__(self) -> int:
        return len(self.word)

    @property
    def is_identity(self) -> bool:
        return not self.word


class ElementTable:
    """
    Interning table mapping canonical words to integer ids.

    With a ``rank`` function the id of a word is its rank, so ids depend only
    on the model and its configuration, never on the order elements are
    first seen. Without one, ids are handed out densely in insertion order
    (table models insert in file order). The identity always has id 0.
    Inserts are lock-guarded so concurrent workers can intern while others
    read.
    """

    def __init__(self, capacity: Optional[int] = None, rank: Optional[Callable[[Word], int]] = None):
        self._ids: Dict[Word, int] = {}
        self._elements: Dict[int, GroupElement] = {}
        self._lock = threading.Lock()
        self._rank = rank
        self.capacity = capacity
        identity = GroupElement(0, ())
        self._elements[0] = identity
        self._ids[()] = 0

    def __len__(self) -> int:
        return len(self._elements)

    def intern(self, word: Word) -> GroupElement:
        """Return the element for a canonical word, creating it on first sight."""
        found = self._ids.get(word)
        if found is not None:
            return self._elements[found]
        element_id = self._rank(word) if self._rank is not None else None
        with self._lock:
            found = self._ids.get(word)
            if found is not None:
                return self._elements[found]
            if self.capacity is not None and len(self._elements) >= self.capacity:
                raise BudgetExceeded(
                    f"interning table is full ({self.capacity} elements)",
                    {"capacity": self.capacity},
                )
            if element_id is None:
                element_id = len(self._elements)
            element = GroupElement(element_id, word)
            self._elements[element_id] = element
            self._ids[word] = element_id
            return element

    def get(self, element_id: int) -> GroupElement:
        """Interned element with this id; KeyError if none."""
        return self._elements[element_id]
