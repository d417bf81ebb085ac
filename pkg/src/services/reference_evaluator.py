"""
Reference Evaluator
Memoization-free evaluation of f, f̄ and r straight from their recursive
definitions, with explicit base points and no equivariant reduction.
Slow by construction; used as an oracle for the memoized MetricContext.
"""

from typing import Optional

from src.chains.arithmetic import EXACT, Arithmetic, Number
from src.chains.chain import Chain0, combine, star
from src.groups.base_model import GroupModel
from src.groups.elements import GroupElement
from src.services.bicombing_service import BicombingService
from src.utils.config import ConstructionParameters, Settings, get_settings


class ReferenceEvaluator:
    """Direct recursive f, f̄ and r."""

    def __init__(
        self,
        model: GroupModel,
        arithmetic: Arithmetic = EXACT,
        construction: Optional[ConstructionParameters] = None,
        config: Optional[Settings] = None,
    ):
        self.model = model
        self.arithmetic = arithmetic
        self.construction = construction or ConstructionParameters()
        self.bicombing = BicombingService(model, config or get_settings())
        self.near = 10 * model.delta
        self.omega = model.ball_size(self.construction.star_radius_factor * model.delta)

    def f(self, b: GroupElement, a: GroupElement) -> Chain0:
        d = self.model.distance(b, a)
        step = self.construction.projection_step_factor
        if d <= self.near:
            return Chain0.vertex(a, self.arithmetic.one)
        if d % self.near:
            return self.f(b, self.bicombing.project(b, a, step))
        petals = self.bicombing.flower(b, a)
        weight = self.arithmetic.ratio(1, len(petals))
        return combine((weight, self.f(b, self.bicombing.project(b, x, step))) for x in petals)

    def fbar(self, b: GroupElement, a: GroupElement) -> Chain0:
        return star(self.model, self.f(b, a), self.construction.star_radius_factor, self.omega)

    def r(self, a: GroupElement, b: GroupElement) -> Number:
        d = self.model.distance(a, b)
        if d == 0:
            return self.arithmetic.zero
        if d <= self.near:
            return self.arithmetic.one
        return self.r_chain(a, self.fbar(b, a)) + self.arithmetic.one

    def r_chain(self, a: GroupElement, z: Chain0) -> Number:
        total = self.arithmetic.zero
        for x, c in z.items():
            total += c * self.r(a, x)
        return total

    def s(self, a: GroupElement, b: GroupElement) -> Number:
        return (self.r(a, b) + self.r(b, a)) / 2
