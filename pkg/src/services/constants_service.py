"""
Constants Service
Estimates every constant bounding the construction: empirical suprema of
the defining defects over seeded samples, least-squares decay fits for the
exponential bounds, and closed-form upper bounds in formula mode.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.chains.arithmetic import Number
from src.exceptions import ConfigurationError, FitFailure
from src.services.metric_service import MetricContext
from src.services.property_sampler import Observation, PropertySampler, bin_maxima
from src.utils.config import Settings, get_settings
from src.utils.logger import get_logger

logger = get_logger(__name__)

Mode = Literal["empirical", "formula", "user"]

CONSTANT_NAMES: Tuple[str, ...] = (
    "N", "N_prime", "N_coupled", "D", "L", "lambda", "lambda_prime", "C1",
    "M_prime", "M", "C2", "C", "mu", "delta1", "delta_prime", "delta2", "A_qi", "B_qi",
)
FIT_PRECISION = 10 ** 6


def to_rational(value: Number) -> Fraction:
    """Exact rational for a Fraction/int, shortest decimal for a float."""
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def ceil_to_grid(value: Fraction, grid: int = FIT_PRECISION) -> Fraction:
    return Fraction(math.ceil(value * grid), grid)


class ConstantEntry(BaseModel):
    """One estimated constant."""

    value: Optional[str] = None
    mode: Mode = "empirical"
    samples: int = 0
    certified: bool = True
    note: Optional[str] = None
    witness: Optional[List[str]] = None

    @property
    def rational(self) -> Optional[Fraction]:
        return None if self.value is None else Fraction(self.value)


class ConstantsRecord(BaseModel):
    """Every constant with its provenance; serialized as JSON with mode tags."""

    delta: int
    radius: int
    budget: int
    seed: int
    mode: Literal["empirical", "formula"] = "empirical"
    arithmetic: str = "exact"
    c2_source: Literal["empirical", "formula", "user"] = "empirical"
    c2_margin: str = "1"
    c2_metric: Optional[str] = None
    model: Dict = Field(default_factory=dict)
    entries: Dict[str, ConstantEntry] = Field(default_factory=dict)

    def value(self, name: str) -> Optional[Fraction]:
        entry = self.entries.get(name)
        return entry.rational if entry else None

    def require(self, name: str) -> Fraction:
        """
        Raises:
            ConfigurationError: If the constant is missing
        """
        value = self.value(name)
        if value is None:
            raise ConfigurationError(f"constant {name} is not available in the record")
        return value

    def set(
        self,
        name: str,
        value: Optional[Number],
        mode: Mode = "empirical",
        samples: int = 0,
        note: Optional[str] = None,
        witness: Optional[List[str]] = None,
    ) -> None:
        self.entries[name] = ConstantEntry(
            value=None if value is None else str(to_rational(value)),
            mode=mode,
            samples=samples,
            note=note,
            witness=witness,
        )

    @property
    def metric_c2(self) -> Optional[Fraction]:
        return None if self.c2_metric is None else Fraction(self.c2_metric)

    def check_invariants(self) -> List[str]:
        """Formula-mode relations that do not hold (empty when consistent)."""
        v, mode = self.value, (lambda n: self.entries[n].mode if n in self.entries else None)
        problems = []
        relations = [
            ("D", lambda: (1 + v("N")) / 2),
            ("delta1", lambda: v("M") + v("C1") + 2 * v("C2")),
            ("delta_prime", lambda: 2 * self.delta + 3 * v("C1") + 2),
            ("delta2", lambda: (v("delta1") + v("delta_prime")) / 2),
        ]
        for name, expected in relations:
            if mode(name) != "formula" or v(name) is None:
                continue
            try:
                target = expected()
            except TypeError:
                continue
            if v(name) != target:
                problems.append(f"{name} = {v(name)} but its formula gives {target}")
        return problems


@dataclass
class Estimate:
    value: Fraction
    samples: int
    witness: Optional[Observation] = None
    note: Optional[str] = None


@dataclass
class DecayFit:
    multiplier: Fraction
    base: Fraction
    bins: Dict[int, Tuple[Number, int, Observation]]
    note: Optional[str] = None


def fit_decay(
    bins: Dict[int, Tuple[Number, int, Observation]],
    what: str,
    tail_from: Optional[int] = None,
) -> DecayFit:
    """
    Fit max-defect(x) <= K·β^x to per-bin maxima.

    The slope of log(bin max) against x comes from a least-squares line over
    the nonzero bins (restricted to x >= tail_from when at least two nonzero
    bins lie there); K is then the least multiplier making the bound hold on
    every nonzero bin, rounded up to a 1e-6 grid. A single nonzero bin uses
    β = 1/2.

    Raises:
        FitFailure: If the fitted base is not below 1
    """
    nonzero = [(x, to_rational(v)) for x, (v, _, _) in bins.items() if v > 0]
    if not nonzero:
        return DecayFit(Fraction(0), Fraction(0), bins, "no nonzero defects sampled")
    if len(nonzero) == 1:
        base = Fraction(1, 2)
        note = "single nonzero bin; base fixed at 1/2"
    else:
        points = nonzero
        if tail_from is not None:
            tail = [(x, v) for x, v in nonzero if x >= tail_from]
            if len(tail) >= 2:
                points = tail
        xs = np.array([x for x, _ in points], dtype=float)
        ys = np.log(np.array([float(v) for _, v in points]))
        slope, _ = np.polyfit(xs, ys, 1)
        fitted = float(np.exp(slope))
        if not fitted < 1:
            raise FitFailure(
                f"{what}: fitted decay base {fitted:.6g} is not below 1",
                {"bins": {str(x): str(v) for x, v in nonzero}, "base": fitted},
            )
        base = Fraction(fitted).limit_denominator(FIT_PRECISION)
        if base >= 1:
            raise FitFailure(f"{what}: fitted decay base rounds to 1", {"base": fitted})
        if base == 0:
            base = Fraction(1, FIT_PRECISION)
        note = f"least squares over {len(points)} nonzero bins"
    multiplier = ceil_to_grid(max(v / base ** x for x, v in nonzero))
    return DecayFit(multiplier, base, bins, note)


def fit_violations(fit: DecayFit, bins: Dict[int, Tuple[Number, int, Observation]]) -> List[int]:
    """Bins whose maximum exceeds the fitted bound."""
    bad = []
    for x, (v, _, _) in bins.items():
        if v <= 0:
            continue
        if fit.base == 0 or to_rational(v) > fit.multiplier * fit.base ** x:
            bad.append(x)
    return bad


class ConstantsService:
    """
    Estimate the construction's constants for one metric context.

    Estimation draws seeded samples from B(1, radius): algebraic models pin
    the first point to the identity by equivariance. Every estimate is
    re-tested on a fresh sample; violations bump the estimate and clear its
    ``certified`` flag.
    """

    def __init__(self, ctx: MetricContext, config: Optional[Settings] = None):
        self.ctx = ctx
        self.config = config or get_settings()
        self.sampler = PropertySampler(ctx)
        self.delta = ctx.delta

    # ------------------------------------------------------------------ #
    # Sampling
    # ------------------------------------------------------------------ #

    def sample(
        self,
        label: str,
        draw: Callable,
        radius: int,
        budget: int,
        seed: int,
    ) -> List[Observation]:
        return self.sampler.collect(label, draw, radius, budget, seed)

    def _render(self, obs: Optional[Observation]) -> Optional[List[str]]:
        if obs is None:
            return None
        return [self.ctx.model.render(g) for g in obs.witness]

    @staticmethod
    def _supremum(
        observations: Sequence[Observation],
        key: Callable[[Observation], Optional[Number]] = lambda o: o.value,
        floor: Fraction = Fraction(0),
    ) -> Estimate:
        best, witness, used = floor, None, 0
        for obs in observations:
            value = key(obs)
            if value is None:
                continue
            used += 1
            value = to_rational(value)
            if value > best or witness is None and value == best:
                best, witness = value, obs
        return Estimate(best, used, witness)

    # ------------------------------------------------------------------ #
    # Estimators: each maps a label's observations to named estimates
    # ------------------------------------------------------------------ #

    def _estimate_shift(self, obs: Sequence[Observation]) -> Dict[str, Estimate]:
        near40 = 40 * self.delta
        return {
            "N": self._supremum(obs, lambda o: o.value - o.extra["d_bb"]),
            "N_prime": self._supremum(obs, lambda o: o.value if o.extra["d_sum"] <= near40 else None),
            "D": self._supremum(obs, lambda o: o.value / (2 * o.extra["d_bb"]) if o.extra["d_bb"] else None),
        }

    def _estimate_lambda_prime(self, obs: Sequence[Observation]) -> Dict[str, Estimate]:
        estimate = self._supremum(obs)
        if estimate.value >= 1:
            estimate.note = "estimate is not below 1"
        return {"lambda_prime": estimate}

    def _estimate_additivity(self, obs: Sequence[Observation]) -> Dict[str, Estimate]:
        return {"C1": self._supremum(obs)}

    def _estimate_lipschitz_first(self, obs: Sequence[Observation]) -> Dict[str, Estimate]:
        return {"M_prime": self._supremum(obs)}

    def _estimate_lipschitz_s(self, obs: Sequence[Observation]) -> Dict[str, Estimate]:
        return {"M": self._supremum(obs)}

    def _estimate_triangle(self, obs: Sequence[Observation]) -> Dict[str, Estimate]:
        return {"C2": self._supremum(obs)}

    def _estimate_weak_geodesic(self, obs: Sequence[Observation]) -> Dict[str, Estimate]:
        return {"delta1": self._supremum(obs)}

    def _estimate_bolic(self, obs: Sequence[Observation]) -> Dict[str, Estimate]:
        delta_prime = self._supremum(obs)
        b2 = self._supremum(obs, lambda o: o.extra["b2_required_delta2"])
        return {"delta_prime": delta_prime, "b2_delta2": b2}

    def _estimate_qi(self, obs: Sequence[Observation]) -> Dict[str, Estimate]:
        """
        Smallest A, B with (1/A)d̂ − B <= d <= A·d̂ + B over the samples:
        A from the distance ratios of the top quartile of d, then B as the
        residual of both inequalities.
        """
        pairs = [(o.bin, to_rational(o.value), o) for o in obs if o.bin > 0]
        if not pairs:
            return {"A_qi": Estimate(Fraction(1), 0), "B_qi": Estimate(Fraction(0), 0)}
        pairs.sort(key=lambda p: p[0])
        top = pairs[(3 * len(pairs)) // 4:]
        a_best, a_obs = Fraction(1), None
        for d, dh, o in top:
            ratio = max(dh / d, d / dh)
            if ratio > a_best:
                a_best, a_obs = ratio, o
        b_best, b_obs = Fraction(0), None
        for d, dh, o in pairs:
            residual = max(dh / a_best - d, d - a_best * dh)
            if residual > b_best:
                b_best, b_obs = residual, o
        return {
            "A_qi": Estimate(a_best, len(top), a_obs),
            "B_qi": Estimate(b_best, len(pairs), b_obs),
        }

    def _phase_one(self) -> List[Tuple[str, Callable, Callable]]:
        s = self.sampler
        return [
            ("shift", s.shift, self._estimate_shift),
            ("lambda_prime", s.fbar_base_shift, self._estimate_lambda_prime),
            ("additivity", s.additivity, self._estimate_additivity),
            ("lipschitz_first", s.lipschitz_first, self._estimate_lipschitz_first),
            ("lipschitz_s", s.lipschitz_s, self._estimate_lipschitz_s),
            ("triangle", s.s_triangle, self._estimate_triangle),
        ]

    def _phase_two(self) -> List[Tuple[str, Callable, Callable]]:
        s = self.sampler
        return [
            ("weak_geodesic", s.weak_geodesic, self._estimate_weak_geodesic),
            ("midpoint", s.midpoint_deviation, self._estimate_weak_geodesic),
            ("bolic", s.bolic_triple, self._estimate_bolic),
            ("qi", s.quasi_isometry, self._estimate_qi),
        ]

    def _run_estimators(
        self,
        estimators: Sequence[Tuple[str, Callable, Callable]],
        radius: int,
        budget: int,
        seed: int,
        prefix: str = "",
    ) -> Dict[str, Estimate]:
        found: Dict[str, Estimate] = {}
        for label, draw, reduce in estimators:
            logger.debug(f"Sampling {prefix}{label} ({budget} draws)")
            obs = self.sample(prefix + label, draw, radius, budget, seed)
            for name, estimate in reduce(obs).items():
                current = found.get(name)
                if current is None or estimate.value > current.value:
                    if current is not None:
                        estimate.samples += current.samples
                    found[name] = estimate
                else:
                    current.samples += estimate.samples
        return found

    def _fits(self, radius: int, budget: int, seed: int, prefix: str = "") -> Dict[str, Dict]:
        spread = self.sample(prefix + "fbar_spread", self.sampler.fbar_spread, radius, budget, seed)
        four = self.sample(prefix + "four_point", self.sampler.four_point, radius, budget, seed)
        return {"L": bin_maxima(spread), "C": bin_maxima(four)}

    # ------------------------------------------------------------------ #
    # Public API
    # ------------------------------------------------------------------ #

    def estimate_constants(
        self,
        radius: int,
        budget: int,
        seed: int = 0,
        mode: Literal["empirical", "formula"] = "empirical",
        c2_source: Literal["empirical", "formula", "user"] = "empirical",
        c2_user: Optional[Fraction] = None,
        c2_margin: Fraction = Fraction(1),
        overrides: Optional[Dict[str, Fraction]] = None,
    ) -> ConstantsRecord:
        """
        Estimate every constant on B(1, radius) with ``budget`` draws per quantity.

        Empirical mode reports suprema of the defining defects; formula mode
        derives the dependent constants from the empirical ingredients
        (N, L, λ). User overrides replace any entry and are used downstream.
        The context's C2 is set from ``c2_source`` before the d̂-level
        constants are sampled.

        Raises:
            BudgetExceeded: If evaluation exceeds a resource cap
            FitFailure: If a decay fit does not produce a base below 1
        """
        overrides = dict(overrides or {})
        ctx = self.ctx
        record = ConstantsRecord(
            delta=self.delta, radius=radius, budget=budget, seed=seed, mode=mode,
            arithmetic=ctx.arithmetic.name, c2_source=c2_source, c2_margin=str(c2_margin),
            model=ctx.model.describe(),
        )
        logger.info(f"📐 Estimating constants ({mode}) on B(1,{radius}), {budget} draws each, seed {seed}")

        found = self._run_estimators(self._phase_one(), radius, budget, seed)
        fits = self._fits(radius, budget, seed)
        spread_fit = fit_decay(fits["L"], "f̄ spread")
        four_fit = fit_decay(fits["C"], "four-point quantity", tail_from=ctx.near)
        self._store_phase_one(record, found, spread_fit, four_fit)
        self._apply_overrides(record, overrides)

        if mode == "formula":
            self._apply_formulas(record)
            self._apply_overrides(record, overrides)

        record.c2_metric = str(self._metric_c2(record, c2_source, c2_user, c2_margin))
        ctx.c2 = ctx.arithmetic.convert(record.metric_c2)
        logger.info(f"d̂ uses C2 = {record.c2_metric} ({c2_source})")

        if mode == "empirical":
            found.update(self._run_estimators(self._phase_two(), radius, budget, seed))
            self._store_phase_two(record, found)
            self._apply_overrides(record, overrides)
            self._retest(record, radius, budget, seed, spread_fit, four_fit)
            self._apply_overrides(record, overrides)

        uncertified = [n for n, e in record.entries.items() if not e.certified]
        if uncertified:
            logger.warning(f"⚠️ Fresh sample exceeded estimates for: {', '.join(uncertified)}")
        else:
            logger.info("✅ All estimates held on the fresh sample")
        return record

    # ------------------------------------------------------------------ #
    # Record assembly
    # ------------------------------------------------------------------ #

    def _put(self, record: ConstantsRecord, name: str, estimate: Estimate) -> None:
        record.set(name, estimate.value, "empirical", estimate.samples,
                   estimate.note, self._render(estimate.witness))

    def _store_phase_one(
        self,
        record: ConstantsRecord,
        found: Dict[str, Estimate],
        spread_fit: DecayFit,
        four_fit: DecayFit,
    ) -> None:
        for name in ("N", "N_prime", "D", "lambda_prime", "C1", "M_prime", "M", "C2"):
            self._put(record, name, found[name])
        record.entries["N"].note = "supremum of |r(a,b) − r(a,b')| − d(b,b'); b' = b gives 0"
        spread_samples = sum(n for _, n, _ in spread_fit.bins.values())
        four_samples = sum(n for _, n, _ in four_fit.bins.values())
        record.set("L", spread_fit.multiplier, samples=spread_samples, note=spread_fit.note)
        record.set("lambda", spread_fit.base, samples=spread_samples, note=spread_fit.note)
        record.set("C", four_fit.multiplier, samples=four_samples, note=four_fit.note)
        record.set("mu", four_fit.base, samples=four_samples, note=four_fit.note)
        self._set_coupled_n(record)

    def _set_coupled_n(self, record: ConstantsRecord) -> None:
        """Least N with N' <= N and λ'·(27δ + N) <= N."""
        lam = record.value("lambda_prime")
        n_prime = record.value("N_prime")
        if lam is None or n_prime is None or lam >= 1:
            record.set("N_coupled", None, note="undefined: λ' estimate is not below 1")
            return
        coupled = max(n_prime, 27 * self.delta * lam / (1 - lam))
        record.set("N_coupled", coupled, samples=record.entries["N_prime"].samples,
                   note="max(N', 27δλ'/(1−λ'))")

    def _store_phase_two(self, record: ConstantsRecord, found: Dict[str, Estimate]) -> None:
        for name in ("delta1", "delta_prime", "A_qi", "B_qi"):
            self._put(record, name, found[name])
        self._set_delta2(record, found["b2_delta2"])

    def _set_delta2(self, record: ConstantsRecord, b2: Estimate) -> None:
        halfway = (record.value("delta1") + record.value("delta_prime")) / 2
        if b2.value > halfway:
            self._put(record, "delta2", b2)
            record.entries["delta2"].note = "set by the sampled midpoint (B2) inequality"
        else:
            record.set("delta2", halfway, samples=b2.samples, note="(δ1 + δ')/2")

    def _metric_c2(
        self,
        record: ConstantsRecord,
        source: str,
        user: Optional[Fraction],
        margin: Fraction,
    ) -> Fraction:
        if source == "user":
            if user is None:
                raise ConfigurationError("C2 source 'user' needs a value")
            return Fraction(user)
        if source == "formula":
            formula = self.formula_values(record).get("C2")
            if formula is None:
                raise ConfigurationError("formula C2 is undefined for these ingredients")
            return formula
        if record.entries["C2"].mode == "user":
            return record.require("C2")
        return record.require("C2") + margin

    def _apply_overrides(self, record: ConstantsRecord, overrides: Dict[str, Fraction]) -> None:
        for name, value in overrides.items():
            record.set(name, value, "user", note="user supplied")

    # ------------------------------------------------------------------ #
    # Formula mode
    # ------------------------------------------------------------------ #

    def formula_values(self, record: ConstantsRecord) -> Dict[str, Optional[Fraction]]:
        """
        Closed-form upper bounds from N, L and λ:

            D = (1 + N)/2
            C1 = (80δ + N + 36δDL)·λ^(−18δ)/(1 − λ)
            M' = (20δ + 3 + 36δDL)·λ^(−19δ)/(1 − λ)
            M = (1 + N + M')/2
            C2 = 2δM + 3C1
            δ1 = M + C1 + 2C2,  δ' = 2δ + 3C1 + 2,  δ2 = (δ1 + δ')/2
            A = 10δ,  B = C2

        Entries depending on a negative power of λ are None when λ = 0.
        """
        delta = self.delta
        n, big_l, lam = record.value("N"), record.value("L"), record.value("lambda")
        values: Dict[str, Optional[Fraction]] = dict.fromkeys(
            ("D", "C1", "M_prime", "M", "C2", "delta1", "delta_prime", "delta2", "A_qi", "B_qi"))
        values["A_qi"] = Fraction(10 * delta)
        if n is None:
            return values
        d = (1 + n) / 2
        values["D"] = d
        if big_l is None or lam is None or lam == 0 or lam >= 1:
            return values
        c1 = (80 * delta + n + 36 * delta * d * big_l) * lam ** (-18 * delta) / (1 - lam)
        m_prime = (20 * delta + 3 + 36 * delta * d * big_l) * lam ** (-19 * delta) / (1 - lam)
        m = (1 + n + m_prime) / 2
        c2 = 2 * delta * m + 3 * c1
        delta1 = m + c1 + 2 * c2
        delta_prime = 2 * delta + 3 * c1 + 2
        values.update({
            "C1": c1, "M_prime": m_prime, "M": m, "C2": c2, "delta1": delta1,
            "delta_prime": delta_prime, "delta2": (delta1 + delta_prime) / 2, "B_qi": c2,
        })
        return values

    def _apply_formulas(self, record: ConstantsRecord) -> None:
        for name, value in self.formula_values(record).items():
            note = "closed form" if value is not None else "undefined for λ = 0 or missing ingredients"
            record.set(name, value, "formula", note=note)
        problems = record.check_invariants()
        if problems:
            logger.error(f"Formula relations broken: {problems}")

    # ------------------------------------------------------------------ #
    # Fresh-sample re-test
    # ------------------------------------------------------------------ #

    def _bump(self, record: ConstantsRecord, name: str, fresh: Estimate) -> None:
        entry = record.entries[name]
        if entry.mode != "empirical" or entry.rational is None:
            return
        if fresh.value > entry.rational:
            logger.warning(f"⚠️ {name}: fresh sample gives {fresh.value} > estimate {entry.value}")
            record.set(name, fresh.value, "empirical", entry.samples + fresh.samples,
                       f"bumped by fresh sample (was {entry.value})", self._render(fresh.witness))
            record.entries[name].certified = False

    def _retest_fit(
        self,
        record: ConstantsRecord,
        names: Tuple[str, str],
        fit: DecayFit,
        fresh_bins: Dict[int, Tuple[Number, int, Observation]],
        what: str,
        tail_from: Optional[int] = None,
    ) -> None:
        mult_name, base_name = names
        if record.entries[mult_name].mode != "empirical":
            return
        if not fit_violations(fit, fresh_bins):
            return
        pooled = dict(fit.bins)
        for x, item in fresh_bins.items():
            if x not in pooled or item[0] > pooled[x][0]:
                pooled[x] = item
        refit = fit_decay(pooled, what, tail_from)
        logger.warning(f"⚠️ {what}: fresh bins exceed the fitted bound; refitting on pooled bins")
        samples = record.entries[mult_name].samples + sum(n for _, n, _ in fresh_bins.values())
        note = f"refit after fresh-sample violation ({refit.note})"
        record.set(mult_name, refit.multiplier, samples=samples, note=note)
        record.set(base_name, refit.base, samples=samples, note=note)
        record.entries[mult_name].certified = False
        record.entries[base_name].certified = False

    def _retest(
        self,
        record: ConstantsRecord,
        radius: int,
        budget: int,
        seed: int,
        spread_fit: DecayFit,
        four_fit: DecayFit,
    ) -> None:
        logger.info("🔁 Re-testing estimates on a fresh sample")
        fresh = self._run_estimators(self._phase_one() + self._phase_two(),
                                     radius, budget, seed, prefix="fresh:")
        for name, estimate in fresh.items():
            if name in record.entries:
                self._bump(record, name, estimate)
        self._set_coupled_n(record)

        halfway = (record.value("delta1") + record.value("delta_prime")) / 2
        needed = max(halfway, fresh["b2_delta2"].value)
        if needed > record.value("delta2") and record.entries["delta2"].mode == "empirical":
            self._bump(record, "delta2", Estimate(needed, fresh["b2_delta2"].samples,
                                                  fresh["b2_delta2"].witness))

        fresh_fits = self._fits(radius, budget, seed, prefix="fresh:")
        self._retest_fit(record, ("L", "lambda"), spread_fit, fresh_fits["L"], "f̄ spread")
        self._retest_fit(record, ("C", "mu"), four_fit, fresh_fits["C"], "four-point quantity",
                         tail_from=self.ctx.near)
