"""
Bicombing Service
Equivariant geodesic bicombing, flowers, projections and fineness checks
"""

import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from src.groups.base_model import GroupModel
from src.groups.elements import GroupElement
from src.exceptions import DomainError
from src.utils.config import Settings, get_settings
from src.utils.logger import get_logger
from src.utils.sampling import batch_rng, partition, random_in_ball, run_batches

logger = get_logger(__name__)


@dataclass(frozen=True)
class GeodesicPath:
    """Vertices x_0 ... x_n of a geodesic, consecutive vertices adjacent."""

    vertices: Tuple[GroupElement, ...]

    @property
    def start(self) -> GroupElement:
        return self.vertices[0]

    @property
    def end(self) -> GroupElement:
        return self.vertices[-1]

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    def __getitem__(self, t: int) -> GroupElement:
        return self.vertices[t]

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)


class FinenessReport(BaseModel):
    """Outcome of a sampled δ-fineness check"""

    radius: int
    geodesic_cap: int
    configured_delta: int
    sampled_triangles: int = 0
    exhaustive: bool = False
    max_defect: int = 0
    certified_delta_lower_bound: int = 0
    witness: Optional[List[str]] = Field(
        default=None, description="Triangle vertices (a, b, c) attaining max_defect"
    )
    note: str = ""

    @property
    def consistent(self) -> bool:
        """True when no sampled triangle contradicts the configured delta."""
        return self.max_defect <= self.configured_delta


class BicombingService:
    """
    Canonical geodesics p[a,b] = a · q(a⁻¹b), with q the ShortLex-least
    geodesic word, plus the flower and projection maps built on them.
    """

    def __init__(self, model: GroupModel, config: Optional[Settings] = None):
        self.model = model
        self.config = config or get_settings()
        self._letters: Optional[Tuple[GroupElement, ...]] = None

    def _generator_elements(self) -> Tuple[GroupElement, ...]:
        if self._letters is None:
            self._letters = tuple(
                self.model.normalize((i,)) for i in range(len(self.model.generators))
            )
        return self._letters

    # ------------------------------------------------------------------ #
    # Geodesics
    # ------------------------------------------------------------------ #

    def geodesic(self, a: GroupElement, b: GroupElement) -> GeodesicPath:
        """
        Canonical geodesic from a to b.

        Raises:
            OutOfLoadedBall: If a table model cannot follow the path
        """
        letters = self._generator_elements()
        vertices = [a]
        for letter in self.model.geodesic_word(a, b):
            vertices.append(self.model.multiply(vertices[-1], letters[letter]))
        return GeodesicPath(tuple(vertices))

    def point_at(self, a: GroupElement, b: GroupElement, t: int) -> GroupElement:
        """
        p[a,b](t): the vertex at distance t from a along the canonical geodesic.

        Raises:
            DomainError: If t is outside [0, d(a,b)]
        """
        d = self.model.distance(a, b)
        if not 0 <= t <= d:
            raise DomainError(f"t={t} outside [0, {d}]", {"t": t, "distance": d})
        if t == 0:
            return a
        if t == d:
            return b
        if self.model.supports_equivariant_reduction:
            prefix = self.model.geodesic_word(a, b)[:t]
            return self.model.multiply(a, self.model.normalize(prefix))
        return self.geodesic(a, b)[t]

    # ------------------------------------------------------------------ #
    # Flowers and projections
    # ------------------------------------------------------------------ #

    def flower(self, v: GroupElement, w: GroupElement) -> List[GroupElement]:
        """Fl(v,w) = S(v, d(v,w)) ∩ B(w, δ), sorted by id."""
        if v == w:
            return [w]
        radius = self.model.distance(v, w)
        petals = [x for x in self.model.ball(w, self.model.delta)
                  if self.model.distance(v, x) == radius]
        return sorted(petals)

    def projection_time(self, distance: int, step_factor: int = 10) -> int:
        """Largest multiple of step_factor·δ strictly below distance (0 if distance is 0)."""
        if distance <= 0:
            return 0
        step = step_factor * self.model.delta
        return ((distance - 1) // step) * step

    def project(self, a: GroupElement, b: GroupElement, step_factor: int = 10) -> GroupElement:
        """pr_a(b); pr_a(a) = a."""
        if a == b:
            return a
        t = self.projection_time(self.model.distance(a, b), step_factor)
        return self.point_at(a, b, t)

    # ------------------------------------------------------------------ #
    # Fineness
    # ------------------------------------------------------------------ #

    def _side_geodesics(self, x: GroupElement, y: GroupElement) -> List[List[GroupElement]]:
        return self.model.geodesics(x, y, self.config.geodesic_cap)

    def _vertex_defect(
        self,
        apex: GroupElement,
        left: GroupElement,
        right: GroupElement,
        left_paths: Sequence[Sequence[GroupElement]],
        right_paths: Sequence[Sequence[GroupElement]],
    ) -> int:
        # inscribed points sit at (left|right)_apex; half-integers round down
        reach = int(self.model.gromov_product(apex, left, right))
        worst = 0
        for p, q in itertools.product(left_paths, right_paths):
            for t in range(1, reach + 1):
                worst = max(worst, self.model.distance(p[t], q[t]))
        return worst

    def triangle_defect(self, a: GroupElement, b: GroupElement, c: GroupElement) -> int:
        """Largest d(v,w) over inscribed point pairs at all three corners."""
        ab = self._side_geodesics(a, b)
        bc = self._side_geodesics(b, c)
        ca = self._side_geodesics(c, a)
        ba = [list(reversed(p)) for p in ab]
        cb = [list(reversed(p)) for p in bc]
        ac = [list(reversed(p)) for p in ca]
        return max(
            self._vertex_defect(a, b, c, ab, ac),
            self._vertex_defect(b, a, c, ba, bc),
            self._vertex_defect(c, a, b, ca, cb),
        )

    def check_delta_fineness(self, radius: int, budget: int, seed: int = 0) -> FinenessReport:
        """
        Search for thick triangles among vertices of B(1, radius).

        Algebraic models fix a = 1 by equivariance; table models draw all three
        corners. The triangle set is enumerated exhaustively when it fits in
        the budget. Sampling only falsifies: the result is a lower bound on
        the true fineness constant.

        Raises:
            BudgetExceeded: If the ball is too large to enumerate
        """
        model = self.model
        report = FinenessReport(
            radius=radius,
            geodesic_cap=self.config.geodesic_cap,
            configured_delta=model.delta,
            note=f"validated up to radius {radius}, cap {self.config.geodesic_cap}",
        )
        if budget <= 0:
            logger.warning("Fineness check skipped: sample budget is 0")
            return report

        logger.info(f"🔍 Checking {model.delta}-fineness on B(1,{radius}), budget {budget}")
        ball = model.ball(model.identity, radius)
        equivariant = model.supports_equivariant_reduction
        domain = len(ball) ** (2 if equivariant else 3)

        triangles: List[Tuple[GroupElement, GroupElement, GroupElement]]
        if domain <= budget:
            report.exhaustive = True
            if equivariant:
                triangles = [(model.identity, b, c) for b in ball for c in ball]
            else:
                triangles = list(itertools.product(ball, repeat=3))
            batches = [triangles[i:i + 256] for i in range(0, len(triangles), 256)]
        else:
            batches = []
            for k, size in enumerate(partition(budget)):
                rng = batch_rng(seed, "fineness", k)
                batch = []
                for _ in range(size):
                    a = model.identity if equivariant else random_in_ball(model, rng, radius)
                    b = random_in_ball(model, rng, radius)
                    c = random_in_ball(model, rng, radius)
                    batch.append((a, b, c))
                batches.append(batch)

        def evaluate(batch):
            worst, witness = -1, None
            for a, b, c in batch:
                defect = self.triangle_defect(a, b, c)
                if defect > worst:
                    worst, witness = defect, (a, b, c)
            return worst, witness, len(batch)

        results = run_batches(evaluate, batches, self.config.workers,
                              self.config.show_progress, "fineness")
        for worst, witness, count in results:
            report.sampled_triangles += count
            if witness is not None and (worst > report.max_defect or report.witness is None):
                report.max_defect = worst
                report.witness = [model.render(x) for x in witness]
        report.certified_delta_lower_bound = report.max_defect

        if report.consistent:
            logger.info(f"✅ Max triangle defect {report.max_defect} over "
                        f"{report.sampled_triangles} triangles")
        else:
            logger.warning(f"⚠️ Triangle defect {report.max_defect} exceeds configured "
                           f"delta {model.delta}: {report.witness}")
        return report
