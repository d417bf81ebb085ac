"""
Metric Service
The chains f and f̄, the recursive function r, its symmetrization s,
the metric d̂ = s + C2 and the midpoint map on geodesics.
"""

import threading
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

from src.chains.arithmetic import EXACT, Arithmetic, Number
from src.chains.chain import Chain0, combine, star
from src.groups.base_model import GroupModel
from src.groups.elements import GroupElement
from src.exceptions import (
    BudgetExceeded,
    ConfigurationError,
    InvariantViolation,
    NonDecreasingRecursion,
)
from src.services.bicombing_service import BicombingService
from src.utils.config import ConstructionParameters, Settings, get_settings
from src.utils.logger import get_logger

logger = get_logger(__name__)

Key = Tuple[int, int]


@dataclass(frozen=True)
class MidpointResult:
    """Chosen midpoint m(x,y) with its index on p[x,y] and its deviations."""

    vertex: GroupElement
    index: int
    deviation_start: Number
    deviation_end: Number

    @property
    def deviation(self) -> Number:
        return max(self.deviation_start, self.deviation_end)


class MetricContext:
    """
    Evaluation context for f, f̄, r, s and d̂ on one group model.

    Memo tables are write-once. When the model multiplies globally, every
    pair is first moved to base point 1 (f(b,a) = b·f(1, b⁻¹a) and
    r(a,b) = r(1, a⁻¹b)); table models memoize on ordered pairs.

    ``construction`` only changes the star radius and the projection step,
    for fault-injection runs; the case thresholds of f and r stay at 10δ and
    always-on assertions only run for the default construction.
    """

    def __init__(
        self,
        model: GroupModel,
        c2: Optional[Number] = None,
        arithmetic: Arithmetic = EXACT,
        construction: Optional[ConstructionParameters] = None,
        config: Optional[Settings] = None,
    ):
        self.model = model
        self.delta = model.delta
        self.config = config or get_settings()
        self.arithmetic = arithmetic
        self.construction = construction or ConstructionParameters()
        self.bicombing = BicombingService(model, self.config)
        if c2 is not None and c2 < 0:
            raise ConfigurationError(f"C2 must be non-negative, got {c2}")
        self.c2 = None if c2 is None else arithmetic.convert(c2)

        self.near = 10 * self.delta
        self.star_radius = self.construction.star_radius_factor * self.delta
        self.step_factor = self.construction.projection_step_factor
        self.omega = model.ball_size(self.star_radius)
        self.assert_invariants = self.config.debug_assertions and self.construction.is_default

        self._equivariant = model.supports_equivariant_reduction
        self._f_memo: Dict[Key, Chain0] = {}
        self._r_memo: Dict[Key, Number] = {}
        self._avg_memo: Dict[Key, Number] = {}
        self._lock = threading.Lock()

        logger.debug(f"MetricContext: delta={self.delta}, omega={self.omega}, "
                     f"arithmetic={arithmetic.name}, construction={self.construction}")

    # ------------------------------------------------------------------ #
    # Memo bookkeeping
    # ------------------------------------------------------------------ #

    @property
    def memo_sizes(self) -> Dict[str, int]:
        return {"f": len(self._f_memo), "r": len(self._r_memo), "star_average": len(self._avg_memo)}

    def _store(self, table: Dict, key: Key, value):
        with self._lock:
            if key in table:
                return table[key]
            if sum(self.memo_sizes.values()) >= self.config.max_memo_entries:
                raise BudgetExceeded(
                    f"memo tables reached the cap of {self.config.max_memo_entries} entries",
                    {"memo": self.memo_sizes},
                )
            table[key] = value
            return value

    def r_entries(self) -> Iterator[Tuple[GroupElement, GroupElement, Number]]:
        """Memoized (base, target, r) triples, for cache persistence."""
        element = self.model.element
        for (base, target), value in list(self._r_memo.items()):
            yield element(base), element(target), value

    def seed_r(self, base: GroupElement, target: GroupElement, value: Number) -> None:
        """Insert a previously computed r(base, target)."""
        self._store(self._r_memo, (base.id, target.id), self.arithmetic.convert(value))

    def _reduce_pair(self, base: GroupElement, x: GroupElement) -> Tuple[GroupElement, GroupElement]:
        if self._equivariant and not base.is_identity:
            return self.model.identity, self.model.multiply(self.model.inverse(base), x)
        return base, x

    # ------------------------------------------------------------------ #
    # f and f̄
    # ------------------------------------------------------------------ #

    def f_chain(self, b: GroupElement, a: GroupElement) -> Chain0:
        """
        f(b, a): convex combination of vertices on S(b, 10δ) near p[b,a](10δ),
        or the single vertex a when d(a,b) <= 10δ.

        Raises:
            OutOfLoadedBall: If a table-model recursion leaves the loaded ball
            InvariantViolation: If an always-on assertion fails
        """
        base, target = self._reduce_pair(b, a)
        chain = self._f_from(base, target)
        if base is b:
            return chain
        return chain.translate(self.model, b)

    def _f_from(self, b: GroupElement, a: GroupElement) -> Chain0:
        key = (b.id, a.id)
        hit = self._f_memo.get(key)
        if hit is not None:
            return hit

        d = self.model.distance(b, a)
        if d <= self.near:
            chain = Chain0.vertex(a, self.arithmetic.one)
        elif d % self.near:
            chain = self._f_from(b, self.bicombing.project(b, a, self.step_factor))
        else:
            petals = self.bicombing.flower(b, a)
            weight = self.arithmetic.ratio(1, len(petals))
            chain = combine(
                (weight, self._f_from(b, self.bicombing.project(b, x, self.step_factor)))
                for x in petals
            )

        if self.assert_invariants:
            self._assert_f(b, a, d, chain)
        return self._store(self._f_memo, key, chain)

    def _assert_f(self, b: GroupElement, a: GroupElement, d: int, chain: Chain0) -> None:
        arith = self.arithmetic
        render = self.model.render
        witness = {"b": render(b), "a": render(a), "distance": d}
        if any(c <= 0 for _, c in chain.items()) or not arith.equal(chain.augmentation, arith.one):
            raise InvariantViolation("f(b,a) is not a convex combination", witness)
        if d <= self.near:
            if chain.support != (a,):
                raise InvariantViolation("f(b,a) != a although d(a,b) <= 10δ", witness)
            return
        center = self.bicombing.point_at(b, a, self.near)
        for y in chain.support:
            if self.model.distance(b, y) != self.near or self.model.distance(center, y) > self.delta:
                raise InvariantViolation(
                    "supp f(b,a) leaves B(p[b,a](10δ), δ) ∩ S(b, 10δ)",
                    {**witness, "vertex": render(y)},
                )

    def fbar_chain(self, b: GroupElement, a: GroupElement) -> Chain0:
        """f̄(b, a) = star(f(b, a))."""
        return star(self.model, self.f_chain(b, a), self.construction.star_radius_factor, self.omega)

    # ------------------------------------------------------------------ #
    # r
    # ------------------------------------------------------------------ #

    def r_value(self, a: GroupElement, b: GroupElement) -> Number:
        """
        r(a, b): 0 on the diagonal, 1 for 0 < d <= 10δ, else r(a, f̄(b,a)) + 1.

        Raises:
            NonDecreasingRecursion: If f̄(b,a) reaches a vertex not closer to a
            BudgetExceeded: If the memo cap is reached
            OutOfLoadedBall: If a table-model recursion leaves the loaded ball
        """
        if a == b:
            return self.arithmetic.zero
        base, target = self._reduce_pair(a, b)
        hit = self._r_memo.get((base.id, target.id))
        if hit is not None:
            return hit
        return self._solve_r(base, target)

    def r_of_chain(self, a: GroupElement, z: Chain0) -> Number:
        """Linear extension r(a, z) = Σ z[x] r(a, x)."""
        total = self.arithmetic.zero
        for x, c in z.items():
            total += c * self.r_value(a, x)
        return total

    def _solve_r(self, a: GroupElement, b: GroupElement) -> Number:
        # explicit work-list; every pushed pair is strictly closer to its base
        stack: List[Tuple[GroupElement, GroupElement]] = [(a, b)]
        while stack:
            base, target = stack[-1]
            key = (base.id, target.id)
            if key in self._r_memo:
                stack.pop()
                continue
            d = self.model.distance(base, target)
            if d <= self.near:
                value = self.arithmetic.zero if d == 0 else self.arithmetic.one
                self._store(self._r_memo, key, value)
                stack.pop()
                continue

            f = self.f_chain(target, base)
            pending = self._pending(base, target, d, f)
            if pending:
                stack.extend(pending)
                continue

            value = self.arithmetic.one
            for y, c in f.items():
                value += c * self._star_average(base, y)
            if self.assert_invariants:
                self._assert_sandwich(base, target, d, value)
            self._store(self._r_memo, key, value)
            stack.pop()
        return self._r_memo[(a.id, b.id)]

    def _pending(
        self, base: GroupElement, target: GroupElement, d: int, f: Chain0
    ) -> List[Tuple[GroupElement, GroupElement]]:
        missing: Dict[Key, Tuple[GroupElement, GroupElement]] = {}
        for y in f.support:
            if (base.id, y.id) in self._avg_memo:
                continue
            for x in self.model.ball(y, self.star_radius):
                dx = self.model.distance(base, x)
                if dx >= d:
                    render = self.model.render
                    logger.error(f"❌ r recursion does not decrease: d(a,x)={dx} >= d(a,b)={d}")
                    raise NonDecreasingRecursion(
                        "f̄(b,a) reaches a vertex no closer to a than b",
                        {"a": render(base), "b": render(target), "x": render(x),
                         "d_ab": d, "d_ax": dx},
                    )
                key = (base.id, x.id)
                if key not in self._r_memo and key not in missing:
                    missing[key] = (base, x)
        return list(missing.values())

    def _star_average(self, base: GroupElement, y: GroupElement) -> Number:
        key = (base.id, y.id)
        hit = self._avg_memo.get(key)
        if hit is not None:
            return hit
        total = self.arithmetic.zero
        for x in self.model.ball(y, self.star_radius):
            total += self._r_memo[(base.id, x.id)]
        return self._store(self._avg_memo, key, total / self.omega)

    def _assert_sandwich(self, a: GroupElement, b: GroupElement, d: int, value: Number) -> None:
        arith = self.arithmetic
        if not (arith.leq(arith.ratio(d, self.near), value) and arith.leq(value, arith.convert(d))):
            raise InvariantViolation(
                "r(a,b) violates d/(10δ) <= r <= d",
                {"a": self.model.render(a), "b": self.model.render(b), "distance": d,
                 "r": str(value)},
            )

    # ------------------------------------------------------------------ #
    # s, d̂ and midpoints
    # ------------------------------------------------------------------ #

    def s_value(self, a: GroupElement, b: GroupElement) -> Number:
        """s(a,b) = ½[r(a,b) + r(b,a)]."""
        if a == b:
            return self.arithmetic.zero
        return (self.r_value(a, b) + self.r_value(b, a)) / 2

    def dhat(self, a: GroupElement, b: GroupElement) -> Number:
        """
        d̂(a,b) = s(a,b) + C2 off the diagonal, 0 on it.

        Raises:
            ConfigurationError: If C2 has not been set
        """
        if self.c2 is None:
            raise ConfigurationError("C2 is not set; estimate constants or pass a value")
        if a == b:
            return self.arithmetic.zero
        return self.s_value(a, b) + self.c2

    def midpoint_with_deviation(self, x: GroupElement, y: GroupElement) -> MidpointResult:
        """
        Vertex of p[x,y] minimizing |d̂(x,·) − d̂(x,y)/2| (first index on ties),
        with both deviations |d̂(x,m) − d̂(x,y)/2| and |d̂(m,y) − d̂(x,y)/2|.
        """
        zero = self.arithmetic.zero
        if x == y:
            return MidpointResult(x, 0, zero, zero)
        half = self.dhat(x, y) / 2
        best: Optional[Tuple[Number, int, GroupElement]] = None
        for i, v in enumerate(self.bicombing.geodesic(x, y)):
            gap = abs(self.dhat(x, v) - half)
            if best is None or gap < best[0]:
                best = (gap, i, v)
        gap, index, vertex = best
        return MidpointResult(vertex, index, gap, abs(self.dhat(vertex, y) - half))

    def midpoint(self, x: GroupElement, y: GroupElement) -> GroupElement:
        return self.midpoint_with_deviation(x, y).vertex
