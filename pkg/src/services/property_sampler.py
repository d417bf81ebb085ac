"""
Property Sampler
Random draws of the quantities bounded by the constants: each draw returns
the measured defect together with the points that produced it, so the same
draws serve constant estimation (suprema) and verification (comparisons).
"""

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from src.chains.arithmetic import Number
from src.groups.elements import GroupElement
from src.services.metric_service import MetricContext
from src.utils.sampling import batch_rng, partition, random_in_ball, run_batches

Draw = Callable[[random.Random, int], Optional["Observation"]]

SQRT_PRECISION = 10 ** 9


@dataclass
class Observation:
    """One measured defect with its witness points"""

    value: Number
    witness: Tuple[GroupElement, ...]
    bin: Optional[int] = None
    extra: Dict[str, Any] = field(default_factory=dict)


def sqrt_bounds(value: Number) -> Tuple[Fraction, Fraction]:
    """Rational lower and upper bounds on sqrt(value) (value >= 0)."""
    q = Fraction(value)
    if q < 0:
        raise ValueError(f"square root of negative value {q}")
    scale = SQRT_PRECISION
    # floor(sqrt(p/q)·scale) = isqrt(p·q·scale²) // q
    root = math.isqrt(q.numerator * q.denominator * scale * scale) // q.denominator
    lower = Fraction(root, scale)
    upper = Fraction(root + 1, scale)
    return lower, upper


def b2_holds(lhs: Number, radicand: Number, slack: Number) -> bool:
    """Exact test of lhs <= sqrt(max(radicand, 0)) + slack by comparing squares."""
    left = lhs - slack
    if left <= 0:
        return True
    return left * left <= max(radicand, 0)


class PropertySampler:
    """Seeded draws over B(1, radius) for one metric context."""

    def __init__(self, ctx: MetricContext):
        self.ctx = ctx
        self.model = ctx.model
        self.delta = ctx.delta

    def collect(self, label: str, draw: Draw, radius: int, budget: int, seed: int) -> List[Observation]:
        """Run ``budget`` draws in seeded batches; draws returning None are dropped."""

        def evaluate(batch):
            index, size = batch
            rng = batch_rng(seed, label, index)
            found = []
            for _ in range(size):
                obs = draw(rng, radius)
                if obs is not None:
                    found.append(obs)
            return found

        config = self.ctx.config
        batches = list(enumerate(partition(budget)))
        results = run_batches(evaluate, batches, config.workers, config.show_progress, label)
        return [obs for batch in results for obs in batch]

    # ------------------------------------------------------------------ #
    # Point selection
    # ------------------------------------------------------------------ #

    def base(self, rng: random.Random, radius: int) -> GroupElement:
        """Identity for models with equivariant reduction, else a random ball element."""
        if self.model.supports_equivariant_reduction:
            return self.model.identity
        return random_in_ball(self.model, rng, radius)

    def point(self, rng: random.Random, radius: int) -> GroupElement:
        return random_in_ball(self.model, rng, radius)

    def walk(self, rng: random.Random, g: GroupElement, steps: int) -> GroupElement:
        for _ in range(steps):
            g = rng.choice(self.model.neighbors(g))
        return g

    def neighbor(self, rng: random.Random, g: GroupElement) -> GroupElement:
        return rng.choice(self.model.neighbors(g))

    def _along(self, a: GroupElement, b: GroupElement, t: int) -> GroupElement:
        return self.ctx.bicombing.point_at(a, b, t)

    # ------------------------------------------------------------------ #
    # r
    # ------------------------------------------------------------------ #

    def shift(self, rng: random.Random, radius: int) -> Observation:
        """|r(a,b) − r(a,b')| for a random pair b, b' (half the time adjacent)."""
        a = self.base(rng, radius)
        b = self.point(rng, radius)
        b2 = self.neighbor(rng, b) if rng.random() < 0.5 else self.point(rng, radius)
        d = self.model.distance
        value = abs(self.ctx.r_value(a, b) - self.ctx.r_value(a, b2))
        return Observation(value, (a, b, b2), extra={
            "d_bb": d(b, b2), "d_sum": d(a, b) + d(a, b2),
        })

    def four_point(self, rng: random.Random, radius: int) -> Observation:
        """|r(a,b) − r(a',b) − r(a,b') + r(a',b')| with d(a,a') = d(b,b') = 1, binned by d(a,b)."""
        a = self.base(rng, radius)
        a2 = self.neighbor(rng, a)
        b = self.point(rng, radius)
        b2 = self.neighbor(rng, b)
        r = self.ctx.r_value
        value = abs(r(a, b) - r(a2, b) - r(a, b2) + r(a2, b2))
        return Observation(value, (a, a2, b, b2), bin=self.model.distance(a, b))

    def additivity(self, rng: random.Random, radius: int) -> Observation:
        """
        max of |r(a,c) − r(a,x) − r(x,c)| (x on p[a,b], c within 9δ of the
        tail past x) and |s(a,b) − s(a,x) − s(x,b)|.
        """
        a = self.base(rng, radius)
        b = self.point(rng, radius)
        d = self.model.distance(a, b)
        k = rng.randint(0, d)
        x = self._along(a, b, k)
        c = self.walk(rng, self._along(a, b, rng.randint(k, d)), rng.randint(0, 9 * self.delta))
        ctx = self.ctx
        r_defect = abs(ctx.r_value(a, c) - ctx.r_value(a, x) - ctx.r_value(x, c))
        s_defect = abs(ctx.s_value(a, b) - ctx.s_value(a, x) - ctx.s_value(x, b))
        return Observation(max(r_defect, s_defect), (a, b, x, c), extra={
            "r_defect": r_defect, "s_defect": s_defect,
        })

    def lipschitz_first(self, rng: random.Random, radius: int) -> Observation:
        """|r(a,b) − r(a',b)| with d(a,a') = 1."""
        a = self.base(rng, radius)
        a2 = self.neighbor(rng, a)
        b = self.point(rng, radius)
        value = abs(self.ctx.r_value(a, b) - self.ctx.r_value(a2, b))
        return Observation(value, (a, a2, b))

    def lipschitz_s(self, rng: random.Random, radius: int) -> Observation:
        """|s(u,v) − s(u,v')| with d(v,v') = 1."""
        u = self.base(rng, radius)
        v = self.point(rng, radius)
        v2 = self.neighbor(rng, v)
        value = abs(self.ctx.s_value(u, v) - self.ctx.s_value(u, v2))
        return Observation(value, (u, v, v2))

    def s_triangle(self, rng: random.Random, radius: int) -> Observation:
        """s(a,b) − s(a,c) − s(c,b); c is near p[a,b] half the time."""
        a = self.base(rng, radius)
        b = self.point(rng, radius)
        if rng.random() < 0.5:
            d = self.model.distance(a, b)
            c = self.walk(rng, self._along(a, b, rng.randint(0, d)), rng.randint(0, 2 * self.delta))
        else:
            c = self.point(rng, radius)
        return self.s_triangle_at(a, b, c)

    def s_triangle_at(self, a: GroupElement, b: GroupElement, c: GroupElement) -> Observation:
        s = self.ctx.s_value
        return Observation(s(a, b) - s(a, c) - s(c, b), (a, b, c))

    # ------------------------------------------------------------------ #
    # f̄
    # ------------------------------------------------------------------ #

    def fbar_spread(self, rng: random.Random, radius: int) -> Observation:
        """|f̄(b,a) − f̄(b,a')|₁ binned by ⌊(a|a')_b⌋."""
        b = self.base(rng, radius)
        a = self.point(rng, radius)
        d = self.model.distance(b, a)
        k = rng.randint(0, d)
        a2 = self.walk(rng, self._along(b, a, k), rng.randint(0, max(0, radius - k)))
        value = (self.ctx.fbar_chain(b, a) - self.ctx.fbar_chain(b, a2)).l1
        product = self.model.gromov_product(b, a, a2)
        return Observation(value, (b, a, a2), bin=math.floor(product))

    def fbar_base_shift(self, rng: random.Random, radius: int) -> Optional[Observation]:
        """
        ½|f̄(b,a) − f̄(b',a)|₁ for b' within 10δ of b; None unless
        (a|b)_b' <= 10δ and (a|b')_b <= 10δ.
        """
        a = self.base(rng, radius)
        b = self.point(rng, radius)
        b2 = self.walk(rng, b, rng.randint(1, 10 * self.delta))
        near = 10 * self.delta
        gp = self.model.gromov_product
        if gp(b2, a, b) > near or gp(b, a, b2) > near:
            return None
        value = (self.ctx.fbar_chain(b, a) - self.ctx.fbar_chain(b2, a)).l1 / 2
        return Observation(value, (a, b, b2))

    # ------------------------------------------------------------------ #
    # d̂
    # ------------------------------------------------------------------ #

    def weak_geodesic(self, rng: random.Random, radius: int) -> Observation:
        """
        Smallest δ₁ for which every t in [0, d̂(x,y)] has a witness a on
        p[x,y] with d̂(x,a) <= t + δ₁ and d̂(a,y) <= d̂(x,y) − t + δ₁. The
        witness is (x, y, a) with a the best vertex at the worst t.
        """
        x = self.base(rng, radius)
        y = self.point(rng, radius)
        return self.weak_geodesic_at(x, y)

    def weak_geodesic_at(self, x: GroupElement, y: GroupElement) -> Observation:
        ctx = self.ctx
        total = ctx.dhat(x, y)
        path = ctx.bicombing.geodesic(x, y)
        from_x = [ctx.dhat(x, v) for v in path]
        to_y = [ctx.dhat(v, y) for v in path]

        # need(t) is a minimum of V-shaped functions of t: its supremum sits at
        # an endpoint or where one falling branch meets another rising one
        times = {ctx.arithmetic.zero, total}
        for fu in from_x:
            for tv in to_y:
                t = (fu - tv + total) / 2
                if 0 <= t <= total:
                    times.add(t)

        def need(t: Number) -> Tuple[Number, GroupElement]:
            return min(
                ((max(fx - t, ty - (total - t)), v) for v, fx, ty in zip(path, from_x, to_y)),
                key=lambda item: item[0],
            )

        ordered = sorted(times)
        worst, vertex = need(ordered[0])
        worst_t = ordered[0]
        for t in ordered[1:]:
            value, best = need(t)
            if value > worst:
                worst, vertex, worst_t = value, best, t
        return Observation(worst, (x, y, vertex), extra={"t": worst_t})

    def midpoint_deviation(self, rng: random.Random, radius: int) -> Observation:
        x = self.base(rng, radius)
        y = self.point(rng, radius)
        result = self.ctx.midpoint_with_deviation(x, y)
        return Observation(result.deviation, (x, y, result.vertex))

    def bolic_triple(self, rng: random.Random, radius: int) -> Observation:
        """
        Midpoint inequality for a random triple. ``value`` is the δ' defect
        d̂(z,m) + d̂(x,y) − max{d̂(x,z) + d̂(y,m), d̂(y,z) + d̂(x,m)};
        ``extra`` carries the B2 sides and the δ₂ it requires.
        """
        x = self.base(rng, radius)
        y = self.point(rng, radius)
        z = self.point(rng, radius) if rng.random() < 0.75 else x
        return self.bolic_triple_at(x, y, z)

    def bolic_triple_at(self, x: GroupElement, y: GroupElement, z: GroupElement) -> Observation:
        ctx = self.ctx
        m = ctx.midpoint(x, y)
        dh = ctx.dhat
        xy, xz, yz = dh(x, y), dh(x, z), dh(y, z)
        zm, xm, ym = dh(z, m), dh(x, m), dh(y, m)
        delta_prime = zm + xy - max(xz + ym, yz + xm)
        lhs = 2 * zm
        radicand = 2 * xz * xz + 2 * yz * yz - xy * xy
        # a negative radicand counts as 0
        lower, _ = sqrt_bounds(max(radicand, 0))
        required = max(Fraction(0), (Fraction(lhs) - lower) / 4)
        return Observation(delta_prime, (x, y, z, m), extra={
            "b2_lhs": lhs, "b2_radicand": radicand, "b2_required_delta2": required,
        })

    def quasi_isometry(self, rng: random.Random, radius: int) -> Observation:
        """(d, d̂) for a random pair; value is d̂."""
        x = self.base(rng, radius)
        y = self.point(rng, radius)
        return Observation(self.ctx.dhat(x, y), (x, y), bin=self.model.distance(x, y))

    def dhat_four_point(self, rng: random.Random, radius: int, spread: int) -> Observation:
        """|d̂(a,b) − d̂(a',b) − d̂(a,b') + d̂(a',b')| with d(a,a'), d(b,b') <= spread."""
        a = self.base(rng, radius)
        a2 = self.walk(rng, a, rng.randint(1, spread))
        b = self.point(rng, radius)
        b2 = self.walk(rng, b, rng.randint(1, spread))
        dh = self.ctx.dhat
        value = abs(dh(a, b) - dh(a2, b) - dh(a, b2) + dh(a2, b2))
        return Observation(value, (a, a2, b, b2), bin=self.model.distance(a, b), extra={
            "d_aa": self.model.distance(a, a2), "d_bb": self.model.distance(b, b2),
        })

    def b1_quadruple(self, rng: random.Random, radius: int, spread: int) -> Observation:
        """
        d̂(a,b') + d̂(a',b) − d̂(a,b) − d̂(a',b') for d(a,a') + d(b,b') <= spread,
        binned by d(a,b) + d(a',b').
        """
        a = self.base(rng, radius)
        first = rng.randint(0, spread)
        a2 = self.walk(rng, a, first)
        b = self.point(rng, radius)
        b2 = self.walk(rng, b, rng.randint(0, spread - first))
        dh = self.ctx.dhat
        d = self.model.distance
        value = dh(a, b2) + dh(a2, b) - dh(a, b) - dh(a2, b2)
        return Observation(value, (a, a2, b, b2), bin=d(a, b) + d(a2, b2))


def mapped(draw: Draw, fn: Callable[[Observation], Optional[Number]]) -> Draw:
    """A draw whose value is fn(observation); None results are dropped."""

    def wrapped(rng: random.Random, radius: int) -> Optional[Observation]:
        obs = draw(rng, radius)
        if obs is None:
            return None
        value = fn(obs)
        if value is None:
            return None
        return Observation(value, obs.witness, obs.bin, obs.extra)

    return wrapped


def bin_maxima(observations: Sequence[Observation]) -> Dict[int, Tuple[Number, int, Observation]]:
    """Per-bin (max value, sample count, witness observation), bins ascending."""
    bins: Dict[int, List] = {}
    for obs in observations:
        entry = bins.get(obs.bin)
        if entry is None:
            bins[obs.bin] = [obs.value, 1, obs]
        else:
            entry[1] += 1
            if obs.value > entry[0]:
                entry[0], entry[2] = obs.value, obs
    return {k: tuple(bins[k]) for k in sorted(bins)}
