"""
Base Group Model Interface
Abstract base class for concrete hyperbolic group models
"""

import hashlib
import json
import threading
from abc import ABC, abstractmethod
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from src.groups.elements import ElementTable, GeneratorSet, GroupElement, Word
from src.exceptions import BudgetExceeded, DomainError
from src.utils.logger import get_logger

logger = get_logger(__name__)

# (last letter, run length) of a canonical word
RunState = Tuple[int, int]


class GroupModel(ABC):
    """
    Abstract base class for group models.

    A model owns its generating set, its fineness constant delta and the
    interning table of its elements. All operations are read-only once the
    model is built, apart from interning new elements.
    """

    kind: str = "abstract"
    supports_equivariant_reduction: bool = False

    def __init__(self, generators: GeneratorSet, delta: int = 1, max_ball_size: int = 5_000_000):
        if delta < 1:
            raise DomainError(f"delta must be a positive integer, got {delta}")
        self.generators = generators
        self.delta = delta
        self.max_ball_size = max_ball_size

    # ------------------------------------------------------------------ #
    # Abstract operations
    # ------------------------------------------------------------------ #

    @property
    @abstractmethod
    def identity(self) -> GroupElement:
        """The identity element (id 0, empty word)."""
        pass

    @abstractmethod
    def normalize(self, raw: Sequence[int]) -> GroupElement:
        """
        Canonical element represented by a word in generator indices.

        Raises:
            DomainError: If an index is not a generator index
            OutOfLoadedBall: If a table model cannot follow the word
        """
        pass

    @abstractmethod
    def multiply(self, a: GroupElement, b: GroupElement) -> GroupElement:
        pass

    @abstractmethod
    def inverse(self, a: GroupElement) -> GroupElement:
        pass

    @abstractmethod
    def distance(self, a: GroupElement, b: GroupElement) -> int:
        """Word-metric distance d(a, b)."""
        pass

    @abstractmethod
    def ball(self, center: GroupElement, radius: int) -> List[GroupElement]:
        """
        Exact enumeration of B(center, radius) in canonical order.

        Raises:
            BudgetExceeded: If the ball exceeds max_ball_size
            OutOfLoadedBall: If a table model does not contain the whole ball
        """
        pass

    @abstractmethod
    def geodesic_word(self, a: GroupElement, b: GroupElement) -> Word:
        """ShortLex-least geodesic word from a to b."""
        pass

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        """JSON-able description (kind, parameters, generator order, delta)."""
        pass

    # ------------------------------------------------------------------ #
    # Shared helpers
    # ------------------------------------------------------------------ #

    def neighbors(self, g: GroupElement) -> List[GroupElement]:
        """g·s for every generator s, in generator order."""
        return [self.multiply(g, self.normalize((i,))) for i in range(len(self.generators))]

    def length(self, g: GroupElement) -> int:
        return self.distance(self.identity, g)

    def sphere(self, center: GroupElement, radius: int) -> List[GroupElement]:
        """S(center, radius) = B(center, radius) minus B(center, radius - 1)."""
        if radius < 0:
            raise DomainError(f"radius must be non-negative, got {radius}")
        return [x for x in self.ball(center, radius) if self.distance(center, x) == radius]

    def ball_size(self, radius: int) -> int:
        """|B(1, radius)|; equal to |B(x, radius)| for every x."""
        return len(self.ball(self.identity, radius))

    def gromov_product(self, a: GroupElement, b: GroupElement, c: GroupElement) -> Fraction:
        """(b|c)_a = ½[d(a,b) + d(a,c) − d(b,c)]."""
        return Fraction(self.distance(a, b) + self.distance(a, c) - self.distance(b, c), 2)

    def geodesics(self, a: GroupElement, b: GroupElement, cap: int) -> List[List[GroupElement]]:
        """
        Up to ``cap`` geodesic vertex paths from a to b, ShortLex order first.

        Walks the geodesic DAG depth-first, expanding neighbors in generator
        order, so the first path returned is the canonical one.
        """
        total = self.distance(a, b)
        paths: List[List[GroupElement]] = []
        stack: List[List[GroupElement]] = [[a]]
        while stack and len(paths) < cap:
            path = stack.pop()
            x = path[-1]
            if x == b:
                paths.append(path)
                continue
            remaining = total - len(path)
            steps = [y for y in self.neighbors(x) if self.distance(y, b) == remaining]
            for y in reversed(steps):
                stack.append(path + [y])
        return paths

    def fingerprint(self) -> str:
        """Stable hash of describe(); keys memo caches."""
        payload = json.dumps(self.describe(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def element(self, element_id: int) -> GroupElement:
        """
        Element with the given id.

        Raises:
            DomainError: If no element has that id
        """
        try:
            return self.table.get(element_id)
        except KeyError:
            raise DomainError(f"no element has id {element_id}") from None

    def render(self, g: GroupElement) -> str:
        return self.generators.render(g.word)

    def _check_indices(self, raw: Sequence[int]) -> None:
        n = len(self.generators)
        for i in raw:
            if not isinstance(i, int) or not 0 <= i < n:
                raise DomainError(f"invalid generator index {i!r} (model has {n} generators)")

    def _check_budget(self, count: int, radius: int) -> None:
        if count > self.max_ball_size:
            logger.error(f"Ball of radius {radius} exceeds cap {self.max_ball_size}")
            raise BudgetExceeded(
                f"ball of radius {radius} exceeds the configured cap of {self.max_ball_size} vertices",
                {"radius": radius, "cap": self.max_ball_size},
            )

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.describe()})"


class AlgebraicGroupModel(GroupModel):
    """
    Group model with a global normal form.

    Subclasses provide ``_reduce`` (raw word -> canonical geodesic word);
    multiplication, inversion, distances and balls follow from it, and the
    length of a canonical word is its word-metric norm.
    """

    supports_equivariant_reduction = True

    # Clamp on run lengths kept in the automaton state; None keeps them exact.
    _run_limit: Optional[int] = None

    def __init__(self, generators: GeneratorSet, delta: int = 1, max_ball_size: int = 5_000_000):
        super().__init__(generators, delta, max_ball_size)
        self._completions = lru_cache(maxsize=None)(self._count_completions)
        self.table = ElementTable(rank=self.canonical_rank)
        self._generator_elements: Tuple[GroupElement, ...] = ()
        self._spheres: List[List[GroupElement]] = [[self.table.get(0)]]
        self._spheres_lock = threading.Lock()

    @abstractmethod
    def _reduce(self, raw: Sequence[int]) -> Word:
        pass

    # ------------------------------------------------------------------ #
    # Canonical ranks
    #
    # Canonical words are read by an automaton whose state is the last
    # letter and the length of its run; whether a letter may follow depends
    # only on that run. The id of an element is the ShortLex rank of its
    # canonical word.
    # ------------------------------------------------------------------ #

    def _next_state(self, state: Optional[RunState], letter: int) -> Optional[RunState]:
        """State after appending ``letter``; None if the word stops being canonical."""
        if state is None:
            return (letter, 1)
        last, run = state
        tail = (last,) * run + (letter,)
        if self._reduce(tail) != tail:
            return None
        run = run + 1 if letter == last else 1
        if self._run_limit is not None:
            run = min(run, self._run_limit)
        return (letter, run)

    def _count_completions(self, state: Optional[RunState], remaining: int) -> int:
        """Number of ways to extend a canonical word in ``state`` by ``remaining`` letters."""
        if remaining == 0:
            return 1
        total = 0
        for letter in range(len(self.generators)):
            nxt = self._next_state(state, letter)
            if nxt is not None:
                total += self._completions(nxt, remaining - 1)
        return total

    def canonical_rank(self, word: Word) -> int:
        """Position of a canonical word in ShortLex order; the identity is 0."""
        n = len(word)
        rank = sum(self._completions(None, j) for j in range(n))
        state: Optional[RunState] = None
        for i, letter in enumerate(word):
            for smaller in range(letter):
                nxt = self._next_state(state, smaller)
                if nxt is not None:
                    rank += self._completions(nxt, n - i - 1)
            state = self._next_state(state, letter)
        return rank

    def element(self, element_id: int) -> GroupElement:
        """
        Element whose canonical word has ShortLex rank ``element_id``.

        Raises:
            DomainError: If no element has that rank
        """
        try:
            return self.table.get(element_id)
        except KeyError:
            pass
        if element_id < 0:
            raise DomainError(f"element ids are non-negative, got {element_id}")
        rank, length = element_id, 0
        while True:
            count = self._completions(None, length)
            if count == 0:
                raise DomainError(f"no element has id {element_id}", {"group_order": element_id - rank})
            if rank < count:
                break
            rank -= count
            length += 1
        word: List[int] = []
        state: Optional[RunState] = None
        for i in range(length):
            for letter in range(len(self.generators)):
                nxt = self._next_state(state, letter)
                if nxt is None:
                    continue
                count = self._completions(nxt, length - i - 1)
                if rank < count:
                    word.append(letter)
                    state = nxt
                    break
                rank -= count
        return self.table.intern(tuple(word))

    @property
    def identity(self) -> GroupElement:
        return self.table.get(0)

    def normalize(self, raw: Sequence[int]) -> GroupElement:
        raw = tuple(raw)
        self._check_indices(raw)
        return self.table.intern(self._reduce(raw))

    def multiply(self, a: GroupElement, b: GroupElement) -> GroupElement:
        if not a.word:
            return b
        if not b.word:
            return a
        return self.table.intern(self._reduce(a.word + b.word))

    def inverse(self, a: GroupElement) -> GroupElement:
        return self.table.intern(self._reduce(self.generators.invert_word(a.word)))

    def distance(self, a: GroupElement, b: GroupElement) -> int:
        if a == b:
            return 0
        return len(self.multiply(self.inverse(a), b).word)

    def geodesic_word(self, a: GroupElement, b: GroupElement) -> Word:
        return self.multiply(self.inverse(a), b).word

    def length(self, g: GroupElement) -> int:
        return len(g.word)

    def neighbors(self, g: GroupElement) -> List[GroupElement]:
        if not self._generator_elements:
            self._generator_elements = tuple(
                self.normalize((i,)) for i in range(len(self.generators))
            )
        return [self.multiply(g, s) for s in self._generator_elements]

    def _identity_spheres(self, radius: int) -> List[List[GroupElement]]:
        """BFS spheres around the identity, cached and extended on demand."""
        if len(self._spheres) > radius:
            return self._spheres[: radius + 1]
        with self._spheres_lock:
            self._extend_spheres(radius)
        return self._spheres[: radius + 1]

    def _extend_spheres(self, radius: int) -> None:
        total = sum(len(s) for s in self._spheres)
        while len(self._spheres) <= radius:
            n = len(self._spheres) - 1
            seen = set()
            shell: List[GroupElement] = []
            for g in self._spheres[n]:
                for h in self.neighbors(g):
                    if len(h.word) == n + 1 and h.id not in seen:
                        seen.add(h.id)
                        shell.append(h)
            total += len(shell)
            self._check_budget(total, n + 1)
            self._spheres.append(shell)
            logger.debug(f"|S(1,{n + 1})| = {len(shell)}")

    def iter_ball(self, radius: int) -> Iterator[GroupElement]:
        for shell in self._identity_spheres(radius):
            yield from shell

    def ball(self, center: GroupElement, radius: int) -> List[GroupElement]:
        if radius < 0:
            raise DomainError(f"radius must be non-negative, got {radius}")
        base = list(self.iter_ball(radius))
        if center.is_identity:
            return base
        return [self.multiply(center, x) for x in base]

    def sphere(self, center: GroupElement, radius: int) -> List[GroupElement]:
        if radius < 0:
            raise DomainError(f"radius must be non-negative, got {radius}")
        shell = self._identity_spheres(radius)[radius]
        if center.is_identity:
            return list(shell)
        return [self.multiply(center, x) for x in shell]

    def ball_size(self, radius: int) -> int:
        return sum(len(s) for s in self._identity_spheres(radius))
