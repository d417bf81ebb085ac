"""
Verification Service
Executable checks for every claimed property of f, f̄, r, s and d̂, grouped
into four suites. Each property reports its maximum defect against a
threshold, with the witnesses that produced the largest defects.
"""

import itertools
import random
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from src.chains.arithmetic import Number
from src.chains.chain import Chain0, star
from src.groups.elements import GroupElement
from src.exceptions import FitFailure
from src.services.constants_service import ConstantsRecord, fit_decay, to_rational
from src.services.metric_service import MetricContext
from src.services.property_sampler import (
    Draw,
    Observation,
    PropertySampler,
    b2_holds,
    bin_maxima,
    mapped,
)
from src.services.reference_evaluator import ReferenceEvaluator
from src.utils.config import Settings, get_settings
from src.utils.logger import get_logger

logger = get_logger(__name__)

SUITES = ("structural", "r", "metric", "bolic")
WITNESS_LIMIT = 3
DECAY_RADII = (1, 2, 3)
B1_GRID = (Fraction(1), Fraction(1, 2))

Domain = Tuple[int, Callable[[], Iterable[Tuple[GroupElement, ...]]]]


class Witness(BaseModel):
    defect: str
    points: List[str]
    extra: Dict[str, str] = Field(default_factory=dict)


class DecayBin(BaseModel):
    d_bin: int
    max_defect: str
    samples: int


class PropertyResult(BaseModel):
    """Outcome of one property: passed iff max_defect <= threshold."""

    property_id: str
    claim: str
    samples: int = 0
    exhaustive: bool = False
    max_defect: Optional[str] = None
    threshold: str = "0"
    passed: bool = True
    insufficient: bool = False
    witnesses: List[Witness] = Field(default_factory=list)
    note: Optional[str] = None
    bins: Optional[List[DecayBin]] = None


class VerificationReport(BaseModel):
    suite: str
    model: Dict[str, Any]
    radius: int
    budget: int
    seed: int
    arithmetic: str
    c2: Optional[str] = None
    properties: List[PropertyResult] = Field(default_factory=list)
    tables: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.properties)

    @property
    def failures(self) -> List[str]:
        return [p.property_id for p in self.properties if not p.passed]

    def get(self, property_id: str) -> PropertyResult:
        for p in self.properties:
            if p.property_id == property_id:
                return p
        raise KeyError(property_id)


class DefectTracker:
    """Running maximum with the top witnesses, merged in batch order."""

    def __init__(self, keep: int = WITNESS_LIMIT):
        self.keep = keep
        self.max: Optional[Fraction] = None
        self.samples = 0
        self.top: List[Tuple[Fraction, Observation]] = []

    def add(self, obs: Observation) -> None:
        value = to_rational(obs.value)
        self.samples += 1
        if self.max is None or value > self.max:
            self.max = value
        if len(self.top) < self.keep or value > self.top[-1][0]:
            self.top.append((value, obs))
            self.top.sort(key=lambda item: -item[0])
            del self.top[self.keep:]


class VerificationService:
    """
    Property suites for one metric context.

    Claims quantified over a finite domain (pairs or triples with the first
    point at 1 for algebraic models) are checked exhaustively when the domain
    fits in the budget; otherwise ``budget`` seeded samples are drawn and the
    exhaustive flag stays clear.
    """

    def __init__(self, ctx: MetricContext, config: Optional[Settings] = None):
        self.ctx = ctx
        self.model = ctx.model
        self.config = config or get_settings()
        self.sampler = PropertySampler(ctx)
        self.reference = ReferenceEvaluator(ctx.model, ctx.arithmetic, ctx.construction, self.config)
        self.delta = ctx.delta
        self.near = 10 * ctx.delta
        self.omega7 = ctx.model.ball_size(7 * ctx.delta)

    # ------------------------------------------------------------------ #
    # Property runner
    # ------------------------------------------------------------------ #

    def _render_witness(self, value: Fraction, obs: Observation) -> Witness:
        extra = {k: str(v) for k, v in obs.extra.items() if v is not None}
        return Witness(defect=str(value), points=[self.model.render(g) for g in obs.witness],
                       extra=extra)

    def _result(
        self,
        property_id: str,
        claim: str,
        threshold: Optional[Number],
        tracker: DefectTracker,
        exhaustive: bool = False,
        note: Optional[str] = None,
    ) -> PropertyResult:
        result = PropertyResult(property_id=property_id, claim=claim, samples=tracker.samples,
                                exhaustive=exhaustive, note=note)
        if threshold is None:
            result.threshold = "unavailable"
            result.passed = False
            result.note = "constant missing from the record"
            return result
        threshold = to_rational(threshold)
        result.threshold = str(threshold)
        result.witnesses = [self._render_witness(v, o) for v, o in tracker.top]
        if tracker.max is None:
            result.insufficient = True
            result.note = note or "no samples; passes vacuously"
            return result
        result.max_defect = str(tracker.max)
        result.passed = tracker.max <= threshold
        if result.passed:
            logger.debug(f"✅ {property_id}: {tracker.max} <= {threshold}")
        else:
            logger.warning(f"❌ {property_id}: max defect {tracker.max} > {threshold}")
        return result

    def _observations(
        self,
        label: str,
        radius: int,
        budget: int,
        seed: int,
        draw: Draw,
        domain: Optional[Domain] = None,
        check: Optional[Callable[..., Optional[Observation]]] = None,
    ) -> Tuple[List[Observation], bool]:
        if budget <= 0:
            return [], False
        if domain is not None and check is not None and domain[0] <= budget:
            found = []
            for item in domain[1]():
                obs = check(*item)
                if obs is not None:
                    found.append(obs)
            return found, True
        return self.sampler.collect(label, draw, radius, budget, seed), False

    def check_property(
        self,
        property_id: str,
        claim: str,
        threshold: Optional[Number],
        radius: int,
        budget: int,
        seed: int,
        draw: Draw,
        domain: Optional[Domain] = None,
        check: Optional[Callable[..., Optional[Observation]]] = None,
        note: Optional[str] = None,
    ) -> PropertyResult:
        """
        Evaluate one property.

        Args:
            draw: Seeded draw producing an Observation whose value is the defect
            domain: Optional (size, enumerator) of the quantified domain
            check: Defect of one domain item (same semantics as ``draw``)
        """
        observations, exhaustive = self._observations(property_id, radius, budget, seed,
                                                      draw, domain, check)
        tracker = DefectTracker()
        for obs in observations:
            tracker.add(obs)
        return self._result(property_id, claim, threshold, tracker, exhaustive, note)

    # ------------------------------------------------------------------ #
    # Domains and draws
    # ------------------------------------------------------------------ #

    def _ball_within(self, radius: int, limit: float) -> Optional[int]:
        """|B(1, radius)| if it is at most ``limit``, else None (stops growing the ball early)."""
        size = 0
        for k in range(radius + 1):
            size = self.model.ball_size(k)
            if size > limit:
                return None
        return size

    def _domain(self, radius: int, points: int, budget: int) -> Optional[Domain]:
        """
        Tuples of ``points`` ball elements, the first fixed at 1 for algebraic
        models; None when the domain is larger than the budget.
        """
        model = self.model
        free = points - 1 if model.supports_equivariant_reduction else points
        size = self._ball_within(radius, budget ** (1 / free) + 1e-6) if budget > 0 else None
        if size is None or size ** free > budget:
            return None

        def enumerate_domain():
            ball = model.ball(model.identity, radius)
            if model.supports_equivariant_reduction:
                return ((model.identity, *rest) for rest in itertools.product(ball, repeat=free))
            return itertools.product(ball, repeat=free)

        return size ** free, enumerate_domain

    def _pair_draw(self, check: Callable[..., Optional[Observation]]) -> Draw:
        def draw(rng: random.Random, radius: int) -> Optional[Observation]:
            return check(self.sampler.base(rng, radius), self.sampler.point(rng, radius))
        return draw

    def _triple_draw(self, check: Callable[..., Optional[Observation]]) -> Draw:
        def draw(rng: random.Random, radius: int) -> Optional[Observation]:
            s = self.sampler
            return check(s.base(rng, radius), s.point(rng, radius), s.point(rng, radius))
        return draw

    def _translation_draw(self, check: Callable[..., Optional[Observation]]) -> Draw:
        """(g, b, a) with d(b,a) within the reference evaluator's range."""
        limit = self.config.reference_max_distance

        def draw(rng: random.Random, radius: int) -> Optional[Observation]:
            s = self.sampler
            g = s.point(rng, radius)
            b = s.base(rng, radius)
            a = s.point(rng, min(radius, limit))
            if self.model.distance(b, a) > limit:
                return None
            return check(g, b, a)
        return draw

    def _point_at(self, b: GroupElement, a: GroupElement, t: int) -> GroupElement:
        return self.ctx.bicombing.point_at(b, a, t)

    # ------------------------------------------------------------------ #
    # Structural suite: f and f̄
    # ------------------------------------------------------------------ #

    @staticmethod
    def _convexity_defect(chain: Chain0) -> Number:
        negative = sum((-c for _, c in chain.items() if c < 0), 0)
        return abs(chain.augmentation - 1) + negative

    def _f_convex(self, b, a):
        return Observation(self._convexity_defect(self.ctx.f_chain(b, a)), (b, a))

    def _f_support(self, b, a):
        model = self.model
        if model.distance(b, a) < self.near:
            return None
        anchor = self._point_at(b, a, self.near)
        defect = 0
        for x in self.ctx.f_chain(b, a).support:
            defect = max(defect, model.distance(anchor, x) - self.delta,
                         abs(model.distance(b, x) - self.near))
        return Observation(defect, (b, a))

    def _f_near(self, b, a):
        if self.model.distance(b, a) > self.near:
            return None
        return Observation((self.ctx.f_chain(b, a) - Chain0.vertex(a, self.ctx.arithmetic.one)).l1, (b, a))

    def _fbar_convex(self, b, a):
        return Observation(self._convexity_defect(self.ctx.fbar_chain(b, a)), (b, a))

    def _fbar_support(self, b, a):
        model = self.model
        d = model.distance(b, a)
        chain = self.ctx.fbar_chain(b, a)
        if d >= self.near:
            anchor, radius = self._point_at(b, a, self.near), 8 * self.delta
        else:
            anchor, radius = a, 7 * self.delta
        defect = max((model.distance(anchor, x) - radius for x in chain.support), default=0)
        return Observation(max(defect, 0), (b, a))

    def _star_profile(self, b, a):
        """f̄(b,a) against the 7δ-star of f(b,a)."""
        expected = star(self.model, self.ctx.f_chain(b, a), 7, self.omega7)
        return Observation((self.ctx.fbar_chain(b, a) - expected).l1, (b, a))

    def _f_equivariance(self, g, b, a):
        ref = self.reference
        m = self.model.multiply
        moved = ref.f(m(g, b), m(g, a))
        return Observation((moved - self.ctx.f_chain(b, a).translate(self.model, g)).l1, (g, b, a))

    def _fbar_equivariance(self, g, b, a):
        ref = self.reference
        m = self.model.multiply
        moved = ref.fbar(m(g, b), m(g, a))
        return Observation((moved - self.ctx.fbar_chain(b, a).translate(self.model, g)).l1, (g, b, a))

    def _tube(self, rng: random.Random, radius: int) -> Observation:
        """supp f̄(c,a) stays within 9δ of p[a,b] whenever c does."""
        s = self.sampler
        a = s.base(rng, radius)
        b = s.point(rng, radius)
        path = self.ctx.bicombing.geodesic(a, b)
        c = s.walk(rng, path[rng.randint(0, path.length)], rng.randint(0, 9 * self.delta))
        return self._tube_at(a, b, c, list(path))

    def _tube_at(self, a, b, c, path: Sequence[GroupElement]) -> Optional[Observation]:
        model = self.model
        tube = 9 * self.delta
        if min(model.distance(c, v) for v in path) > tube:
            return None
        defect = 0
        for x in self.ctx.fbar_chain(c, a).support:
            defect = max(defect, min(model.distance(x, v) for v in path) - tube)
        return Observation(defect, (a, b, c))

    def verify_structural(self, radius: int, budget: int, seed: int = 0) -> VerificationReport:
        """Exact claims about f and f̄ (threshold 0)."""
        report = self._report("structural", radius, budget, seed)
        pairs = self._domain(radius, 2, budget)
        exact = [
            ("f.convex", "f(b,a) is a convex combination", self._f_convex),
            ("f.support", "d(a,b) >= 10δ: supp f(b,a) ⊆ B(p[b,a](10δ), δ) ∩ S(b, 10δ)", self._f_support),
            ("f.near", "d(a,b) <= 10δ: f(b,a) = a", self._f_near),
            ("fbar.convex", "f̄(b,a) is a convex combination", self._fbar_convex),
            ("fbar.support", "d(a,b) >= 10δ: supp f̄(b,a) ⊆ B(p[b,a](10δ), 8δ); "
                             "otherwise supp f̄(b,a) ⊆ B(a, 7δ)", self._fbar_support),
            ("fbar.star_profile", "f̄(b,a) = star(f(b,a)) with the 7δ star", self._star_profile),
        ]
        for property_id, claim, check in exact:
            report.properties.append(self.check_property(
                property_id, claim, 0, radius, budget, seed,
                self._pair_draw(check), pairs, check))

        equivariance = [
            ("f.equivariance", "f(gb, ga) = g·f(b,a)", self._f_equivariance),
            ("fbar.equivariance", "f̄(gb, ga) = g·f̄(b,a)", self._fbar_equivariance),
        ]
        for property_id, claim, check in equivariance:
            report.properties.append(self._equivariance_property(
                property_id, claim, radius, budget, seed, check))

        report.properties.append(self.check_property(
            "fbar.tube", "c within 9δ of p[a,b]: supp f̄(c,a) within 9δ of p[a,b]",
            0, radius, budget, seed, self._tube))
        return self._finish(report)

    def _equivariance_property(self, property_id, claim, radius, budget, seed, check) -> PropertyResult:
        if not self.model.supports_equivariant_reduction:
            return self._result(property_id, claim, 0, DefectTracker(),
                                note="table models do not translate beyond the loaded ball")
        return self.check_property(property_id, claim, 0, radius, budget, seed,
                                   self._translation_draw(check))

    # ------------------------------------------------------------------ #
    # r suite
    # ------------------------------------------------------------------ #

    def _sandwich(self, a, b):
        d = self.model.distance(a, b)
        r = to_rational(self.ctx.r_value(a, b))
        return Observation(max(Fraction(d, self.near) - r, r - d), (a, b), extra={"r": r})

    def _r_equivariance(self, g, a, b):
        m = self.model.multiply
        value = abs(to_rational(self.reference.r(m(g, a), m(g, b))) - to_rational(self.ctx.r_value(a, b)))
        return Observation(value, (g, a, b))

    def four_point_bins(self, radius: int, budget: int, seed: int):
        obs = self.sampler.collect("r.four_point", self.sampler.four_point, radius, budget, seed)
        return bin_maxima(obs)

    def _decay_property(
        self,
        property_id: str,
        claim: str,
        bins,
        bound: Callable[[int], Optional[Fraction]],
        monotone: bool,
    ) -> PropertyResult:
        """
        Defect = max over bins of (bin max − bound(d)); with ``monotone`` also the
        largest increase between consecutive 10δ blocks of bin maxima past 10δ.
        """
        tracker = DefectTracker()
        notes = []
        for d, (value, count, obs) in bins.items():
            limit = bound(d)
            if limit is None:
                continue
            tracker.samples += count - 1
            tracker.add(Observation(to_rational(value) - limit, obs.witness, d, {"bin_max": value}))
        if monotone and bins:
            blocks: Dict[int, Fraction] = {}
            for d, (value, _, _) in bins.items():
                if d >= self.near:
                    k = d // self.near
                    blocks[k] = max(blocks.get(k, Fraction(0)), to_rational(value))
            keys = sorted(blocks)
            rises = [(blocks[k2] - blocks[k1], k2) for k1, k2 in zip(keys, keys[1:])
                     if blocks[k2] > blocks[k1]]
            if rises:
                rise, k = max(rises)
                notes.append(f"block maxima rise by {rise} at d >= {k * self.near}")
                tracker.add(Observation(rise, (), k * self.near, {"block_rise": rise}))
        result = self._result(property_id, claim, 0, tracker, note="; ".join(notes) or None)
        result.bins = [DecayBin(d_bin=d, max_defect=str(to_rational(v)), samples=n)
                       for d, (v, n, _) in bins.items()]
        return result

    def verify_r_properties(
        self,
        constants: ConstantsRecord,
        radius: int,
        budget: int,
        seed: int = 0,
    ) -> VerificationReport:
        """Sandwich, shift, chain, decay, additivity, Lipschitz and equivariance of r."""
        report = self._report("r", radius, budget, seed)
        s = self.sampler
        v = constants.value
        pairs = self._domain(radius, 2, budget)
        report.properties.append(self.check_property(
            "r.sandwich", "d(a,b)/(10δ) <= r(a,b) <= d(a,b)", 0, radius, budget, seed,
            self._pair_draw(self._sandwich), pairs, self._sandwich))
        report.properties.append(self.check_property(
            "r.shift", "|r(a,b) − r(a,b')| − d(b,b') <= N", v("N"), radius, budget, seed,
            mapped(s.shift, lambda o: o.value - o.extra["d_bb"])))
        report.properties.append(self.check_property(
            "r.chain", "|r(a, b − b')| <= D·|b − b'|₁·diam = 2D·d(b,b')", v("D"), radius, budget, seed,
            mapped(s.shift, lambda o: o.value / (2 * o.extra["d_bb"]) if o.extra["d_bb"] else None)))

        bins = self.four_point_bins(radius, budget, seed)
        report.properties.append(self._four_point_property(constants, bins))
        report.properties.append(self.check_property(
            "r.additivity", "|r(a,c) − r(a,x) − r(x,c)| <= C1 for x on p[a,b], c near its tail",
            v("C1"), radius, budget, seed, mapped(s.additivity, lambda o: o.extra["r_defect"])))
        report.properties.append(self.check_property(
            "r.lipschitz", "|r(a,b) − r(a',b)| <= M'·d(a,a')", v("M_prime"), radius, budget, seed,
            s.lipschitz_first))
        report.properties.append(self._equivariance_property(
            "r.equivariance", "r(ga, gb) = r(a,b)", radius, budget, seed, self._r_equivariance))
        return self._finish(report)

    def _four_point_property(self, constants: ConstantsRecord, bins) -> PropertyResult:
        claim = "|r(a,b) − r(a',b) − r(a,b') + r(a',b')| <= C·μ^d(a,b), non-increasing in d"
        c, mu = constants.value("C"), constants.value("mu")
        note = None
        try:
            fit = fit_decay(bins, "four-point quantity", tail_from=self.near)
            note = f"fit on this sample: C = {fit.multiplier}, μ = {fit.base}"
        except FitFailure as e:
            note = f"fit failed: {e.message}"
            c = mu = None
        if c is None or mu is None:
            result = self._decay_property("r.four_point_decay", claim, bins, lambda d: None, True)
            result.passed = False
            result.threshold = "unavailable"
            result.note = note
            return result

        def bound(d: int) -> Fraction:
            return c * mu ** d if mu else (c if d == 0 else Fraction(0))

        result = self._decay_property("r.four_point_decay", claim, bins, bound, True)
        result.note = "; ".join(filter(None, [result.note, note]))
        return result

    # ------------------------------------------------------------------ #
    # Metric suite: s and d̂
    # ------------------------------------------------------------------ #

    def _symmetry(self, a, b):
        return Observation(abs(to_rational(self.ctx.dhat(a, b)) - to_rational(self.ctx.dhat(b, a))), (a, b))

    def _identity(self, a, b):
        value = to_rational(self.ctx.dhat(a, b))
        if a == b:
            return Observation(abs(value), (a, b))
        return Observation(0 if value > 0 else 1, (a, b))

    def _near_constancy(self, a, b):
        d = self.model.distance(a, b)
        if not 0 < d <= self.near:
            return None
        return Observation(abs(to_rational(self.ctx.dhat(a, b)) - 1 - to_rational(self.ctx.c2)), (a, b))

    def _dhat_triangle(self, a, b, c):
        dh = self.ctx.dhat
        return Observation(to_rational(dh(a, b) - dh(a, c) - dh(c, b)), (a, b, c))

    def _envelope(self, a, b):
        d = self.model.distance(a, b)
        if d == 0:
            return None
        dh = to_rational(self.ctx.dhat(a, b)) - to_rational(self.ctx.c2)
        return Observation(max(Fraction(d, self.near) - dh, dh - d), (a, b))

    def _dhat_equivariance(self, g, a, b):
        m = self.model.multiply
        moved = to_rational(self.reference.s(m(g, a), m(g, b))) + to_rational(self.ctx.c2)
        if a == b:
            moved = Fraction(0)
        return Observation(abs(moved - to_rational(self.ctx.dhat(a, b))), (g, a, b))

    def verify_metric(
        self,
        constants: ConstantsRecord,
        radius: int,
        budget: int,
        seed: int = 0,
    ) -> VerificationReport:
        """
        Metric axioms of d̂ plus the s-level bounds and the four-point decay of
        d̂ for spreads R = 1, 2, 3.

        Raises:
            ConfigurationError: If the context has no C2
        """
        report = self._report("metric", radius, budget, seed)
        s = self.sampler
        v = constants.value
        triples = self._domain(radius, 3, budget)
        near_radius = min(radius, self.near)

        exact_pairs = [
            ("dhat.symmetry", "d̂(a,b) = d̂(b,a)", self._symmetry, radius),
            ("dhat.identity", "d̂(a,b) = 0 iff a = b", self._identity, radius),
            ("dhat.near_constancy", "0 < d(a,b) <= 10δ: d̂(a,b) = 1 + C2", self._near_constancy, near_radius),
            ("dhat.envelope", "d/(10δ) <= d̂(a,b) − C2 <= d(a,b) off the diagonal", self._envelope, radius),
        ]
        for property_id, claim, check, scope in exact_pairs:
            report.properties.append(self.check_property(
                property_id, claim, 0, scope, budget, seed, self._pair_draw(check),
                self._domain(scope, 2, budget), check))

        report.properties.append(self.check_property(
            "dhat.triangle", "d̂(a,b) <= d̂(a,c) + d̂(c,b)", 0, radius, budget, seed,
            self._triple_draw(self._dhat_triangle), triples, self._dhat_triangle))
        report.properties.append(self.check_property(
            "s.lipschitz", "|s(u,v) − s(u,v')| <= M·d(v,v')", v("M"), radius, budget, seed,
            s.lipschitz_s))
        report.properties.append(self.check_property(
            "s.additivity", "|s(a,b) − s(a,x) − s(x,b)| <= C1 for x on p[a,b]", v("C1"),
            radius, budget, seed, mapped(s.additivity, lambda o: o.extra["s_defect"])))
        report.properties.append(self.check_property(
            "s.triangle", "s(a,b) <= s(a,c) + s(c,b) + C2", v("C2"), radius, budget, seed,
            s.s_triangle, triples, s.s_triangle_at))
        report.properties.append(self._equivariance_property(
            "dhat.equivariance", "d̂(ga, gb) = d̂(a,b)", radius, budget, seed, self._dhat_equivariance))

        c, mu = v("C"), v("mu")
        for spread in DECAY_RADII:
            obs = s.collect(f"dhat.decay_R{spread}", lambda rng, r, k=spread: s.dhat_four_point(rng, r, k),
                            radius, budget, seed)
            bins = bin_maxima(obs)
            claim = f"four-point defect of d̂ at spread {spread} <= {spread}²·C·μ^(d − {2 * spread})"
            if c is None or mu is None:
                bound = lambda d: None  # noqa: E731
            else:
                bound = lambda d, k=spread: k * k * c * mu ** (d - 2 * k) if mu else (
                    k * k * c if d <= 2 * k else Fraction(0))
            result = self._decay_property(f"dhat.decay_R{spread}", claim, bins, bound, False)
            if c is None or mu is None:
                result.passed, result.threshold = False, "unavailable"
            report.properties.append(result)
        return self._finish(report)

    # ------------------------------------------------------------------ #
    # Bolic suite: weak geodesicity, B1, B2, quasi-isometry
    # ------------------------------------------------------------------ #

    def _b2_defect(self, delta2: Fraction) -> Callable[[Observation], Number]:
        def defect(obs: Observation) -> Number:
            extra = obs.extra
            required = extra["b2_required_delta2"]
            if b2_holds(extra["b2_lhs"], extra["b2_radicand"], 4 * delta2):
                return min(required, delta2)
            return max(required, delta2 + Fraction(1, 10 ** 9))
        return defect

    def _b1_table(self, radius: int, budget: int, seed: int, grid: Sequence[Fraction]):
        """R' per (spread, δ2): smallest sampled d(a,b)+d(a',b') past which every B1 defect <= 2δ2."""
        table: Dict[str, Dict[str, Optional[int]]] = {}
        worst: List[Tuple[Fraction, str, Observation]] = []
        samples = 0
        for spread in DECAY_RADII:
            obs = self.sampler.collect(f"dhat.B1_R{spread}",
                                       lambda rng, r, k=spread: self.sampler.b1_quadruple(rng, r, k),
                                       radius, budget, seed)
            samples += len(obs)
            bins = bin_maxima(obs)
            row: Dict[str, Optional[int]] = {}
            for delta2 in grid:
                limit = 2 * delta2
                threshold_bin: Optional[int] = None
                for d in sorted(bins, reverse=True):
                    if to_rational(bins[d][0]) > limit:
                        break
                    threshold_bin = d
                row[str(delta2)] = threshold_bin
                if bins and threshold_bin is None:
                    top = max(bins)
                    worst.append((to_rational(bins[top][0]) - limit, f"R={spread}, δ2={delta2}",
                                  bins[top][2]))
            table[str(spread)] = row
        return table, worst, samples

    def _qi_defect(self, a_qi: Fraction, b_qi: Fraction) -> Callable[[Observation], Number]:
        def defect(obs: Observation) -> Number:
            d, dh = obs.bin, to_rational(obs.value)
            return max(dh / a_qi - b_qi - d, d - a_qi * dh - b_qi)
        return defect

    def verify_bolic_geodesic(
        self,
        constants: ConstantsRecord,
        radius: int,
        budget: int,
        seed: int = 0,
    ) -> VerificationReport:
        """Weak geodesicity, the midpoint bounds, B1 (R' table), B2 and the quasi-isometry."""
        report = self._report("bolic", radius, budget, seed)
        s = self.sampler
        v = constants.value
        report.properties.append(self.check_property(
            "dhat.weak_geodesic", "every t in [0, d̂(x,y)] has a on p[x,y] with d̂(x,a) <= t + δ1 "
            "and d̂(a,y) <= d̂(x,y) − t + δ1", v("delta1"), radius, budget, seed, s.weak_geodesic))
        report.properties.append(self.check_property(
            "dhat.midpoint", "|d̂(x,m) − d̂(x,y)/2| and |d̂(m,y) − d̂(x,y)/2| <= δ1", v("delta1"),
            radius, budget, seed, s.midpoint_deviation))
        report.properties.append(self.check_property(
            "dhat.midpoint_inequality", "d̂(z,m) + d̂(x,y) <= max{d̂(x,z) + d̂(y,m), "
            "d̂(y,z) + d̂(x,m)} + δ'", v("delta_prime"), radius, budget, seed, s.bolic_triple))

        delta2 = v("delta2")
        b2_claim = "2d̂(m,z) <= (2d̂(x,z)² + 2d̂(y,z)² − d̂(x,y)²)^½ + 4δ2"
        if delta2 is None:
            report.properties.append(self._result("dhat.B2", b2_claim, None, DefectTracker()))
        else:
            report.properties.append(self.check_property(
                "dhat.B2", b2_claim, delta2, radius, budget, seed,
                mapped(s.bolic_triple, self._b2_defect(delta2))))

        grid = sorted({*B1_GRID, *([delta2] if delta2 else [])}, reverse=True)
        table, worst, samples = self._b1_table(radius, budget, seed, grid)
        report.tables["b1_r_prime"] = table
        tracker = DefectTracker()
        tracker.samples = samples
        for value, label, obs in worst:
            tracker.add(Observation(value, obs.witness, obs.bin, {"cell": label}))
        if samples and tracker.max is None:
            tracker.max = Fraction(0)
        report.properties.append(self._result(
            "dhat.B1", "d̂(a,b') + d̂(a',b) <= d̂(a,b) + d̂(a',b') + 2δ2 once d(a,b) + d(a',b') >= R'",
            0, tracker, note="R' reported on the tested grid only; table under b1_r_prime"))

        a_qi, b_qi = v("A_qi"), v("B_qi")
        qi_claim = "(1/A)·d̂ − B <= d <= A·d̂ + B"
        if a_qi is None or b_qi is None or a_qi == 0:
            report.properties.append(self._result("dhat.quasi_isometry", qi_claim, None, DefectTracker()))
        else:
            report.properties.append(self.check_property(
                "dhat.quasi_isometry", qi_claim, 0, radius, budget, seed + 1,
                mapped(s.quasi_isometry, self._qi_defect(a_qi, b_qi)),
                note="fresh sample (seed + 1)"))
        return self._finish(report)

    # ------------------------------------------------------------------ #
    # Helpers
    # ------------------------------------------------------------------ #

    def _report(self, suite: str, radius: int, budget: int, seed: int) -> VerificationReport:
        logger.info(f"🔍 Running {suite} suite on B(1,{radius}), budget {budget}, seed {seed}")
        c2 = None if self.ctx.c2 is None else str(to_rational(self.ctx.c2))
        return VerificationReport(suite=suite, model=self.model.describe(), radius=radius,
                                  budget=budget, seed=seed, arithmetic=self.ctx.arithmetic.name, c2=c2)

    @staticmethod
    def _finish(report: VerificationReport) -> VerificationReport:
        if report.passed:
            logger.info(f"✅ {report.suite} suite passed ({len(report.properties)} properties)")
        else:
            logger.warning(f"⚠️ {report.suite} suite failed: {', '.join(report.failures)}")
        return report
