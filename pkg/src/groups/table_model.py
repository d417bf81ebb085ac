"""
Table Model
Groups given as an explicit Cayley ball with generator-labelled adjacency,
loaded from (and exported to) the Table-Model JSON format.
"""

import hashlib
import itertools
import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import networkx as nx

from src.groups.base_model import GroupModel
from src.groups.elements import ElementTable, GeneratorSet, GroupElement, Word
from src.exceptions import DomainError, FormatError, OutOfLoadedBall
from src.utils.logger import get_logger

logger = get_logger(__name__)

TABLE_FORMAT_VERSION = 1


class TableModel(GroupModel):
    """
    Finite Cayley ball B(1, radius) of some group.

    There is no multiplication oracle outside the ball, so every operation
    works from explicit base points and raises OutOfLoadedBall as soon as a
    computation would need a vertex that is not loaded. Distances are BFS
    distances inside the loaded ball.
    """

    kind = "table"
    supports_equivariant_reduction = False

    def __init__(
        self,
        generators: GeneratorSet,
        radius: int,
        words: Sequence[Word],
        adjacency: Sequence[Sequence[int]],
        delta: int = 1,
        max_ball_size: int = 5_000_000,
        source: Optional[str] = None,
    ):
        super().__init__(generators, delta, max_ball_size)
        self.radius = radius
        self.source = source
        self.adjacency = [tuple(row) for row in adjacency]
        self._check_budget(len(words), radius)

        self.table = ElementTable()
        for word in words[1:]:
            self.table.intern(tuple(word))

        self.graph = nx.Graph()
        self.graph.add_nodes_from(range(len(words)))
        for g, row in enumerate(self.adjacency):
            for h in row:
                if h >= 0 and h != g:
                    self.graph.add_edge(g, h)

        self._bfs = lru_cache(maxsize=4096)(self._compute_bfs)
        self._lengths = self._bfs(0)

    # ------------------------------------------------------------------ #
    # Internals
    # ------------------------------------------------------------------ #

    def _compute_bfs(self, source: int) -> Dict[int, int]:
        return nx.single_source_shortest_path_length(self.graph, source)

    def _follow(self, start: int, word: Sequence[int]) -> int:
        current = start
        for step, letter in enumerate(word):
            nxt = self.adjacency[current][letter]
            if nxt < 0:
                raise OutOfLoadedBall(
                    f"word leaves the loaded ball of radius {self.radius} "
                    f"after {step} letters",
                    {"start": start, "word": list(word), "radius": self.radius},
                )
            current = nxt
        return current

    def _element(self, element_id: int) -> GroupElement:
        return self.table.get(element_id)

    # ------------------------------------------------------------------ #
    # GroupModel interface
    # ------------------------------------------------------------------ #

    @property
    def identity(self) -> GroupElement:
        return self.table.get(0)

    def __len__(self) -> int:
        return len(self.table)

    def normalize(self, raw: Sequence[int]) -> GroupElement:
        raw = tuple(raw)
        self._check_indices(raw)
        return self._element(self._follow(0, raw))

    def multiply(self, a: GroupElement, b: GroupElement) -> GroupElement:
        return self._element(self._follow(a.id, b.word))

    def inverse(self, a: GroupElement) -> GroupElement:
        return self._element(self._follow(0, self.generators.invert_word(a.word)))

    def distance(self, a: GroupElement, b: GroupElement) -> int:
        if a == b:
            return 0
        return self._bfs(a.id)[b.id]

    def length(self, g: GroupElement) -> int:
        return self._lengths[g.id]

    def neighbors(self, g: GroupElement) -> List[GroupElement]:
        """Loaded neighbors g·s in generator order (boundary vertices have fewer)."""
        return [self._element(h) for h in self.adjacency[g.id] if h >= 0]

    def ball(self, center: GroupElement, radius: int) -> List[GroupElement]:
        if radius < 0:
            raise DomainError(f"radius must be non-negative, got {radius}")
        if self.length(center) + radius > self.radius:
            raise OutOfLoadedBall(
                f"B(x,{radius}) around an element of length {self.length(center)} "
                f"is not contained in the loaded ball of radius {self.radius}",
                {"center": center.id, "radius": radius, "loaded_radius": self.radius},
            )
        found = nx.single_source_shortest_path_length(self.graph, center.id, cutoff=radius)
        return [self._element(i) for i in sorted(found, key=lambda i: (found[i], i))]

    def geodesic_word(self, a: GroupElement, b: GroupElement) -> Word:
        """ShortLex-least geodesic from a to b by ordered greedy descent on d(·, b)."""
        to_b = self._bfs(b.id)
        word: List[int] = []
        current = a.id
        while current != b.id:
            here = to_b[current]
            for letter, nxt in enumerate(self.adjacency[current]):
                if nxt >= 0 and to_b.get(nxt) == here - 1:
                    word.append(letter)
                    current = nxt
                    break
        return tuple(word)

    def geodesics(self, a: GroupElement, b: GroupElement, cap: int) -> List[List[GroupElement]]:
        paths = nx.all_shortest_paths(self.graph, a.id, b.id)
        canonical = self.geodesic_path_ids(a, b)
        result = [canonical]
        for path in itertools.islice(paths, cap):
            if len(result) >= cap:
                break
            if path != canonical:
                result.append(path)
        return [[self._element(i) for i in path] for path in result]

    def geodesic_path_ids(self, a: GroupElement, b: GroupElement) -> List[int]:
        ids = [a.id]
        for letter in self.geodesic_word(a, b):
            ids.append(self.adjacency[ids[-1]][letter])
        return ids

    def describe(self) -> Dict[str, Any]:
        digest = hashlib.sha256(
            json.dumps(self.adjacency, separators=(",", ":")).encode("utf-8")
        ).hexdigest()
        return {
            "kind": self.kind,
            "radius": self.radius,
            "elements": len(self.table),
            "generators": list(self.generators.symbols),
            "delta": self.delta,
            "adjacency_sha256": digest,
        }


# ---------------------------------------------------------------------- #
# Loading and export
# ---------------------------------------------------------------------- #

def _require(condition: bool, message: str, field: str) -> None:
    if not condition:
        raise FormatError(message, field=field)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def load_table_model(
    path: Union[str, Path],
    delta: int = 1,
    max_ball_size: int = 5_000_000,
) -> TableModel:
    """
    Load and validate a Table-Model file.

    Args:
        path: JSON file with version, generators, radius, elements, adjacency
        delta: Fineness constant for the loaded group
        max_ball_size: Refuse files with more elements than this

    Returns:
        TableModel backed by the file's adjacency

    Raises:
        FormatError: Malformed JSON, bad involution, missing identity,
            asymmetric adjacency or elements beyond the declared radius
    """
    path = Path(path)
    logger.info(f"Loading table model from {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(f"cannot read table file {path}: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e.msg}", line=e.lineno) from e

    _require(isinstance(doc, dict), "table file must hold a JSON object", "<root>")
    for key in ("version", "generators", "radius", "elements", "adjacency"):
        _require(key in doc, f"missing field '{key}'", key)
    _require(doc["version"] == TABLE_FORMAT_VERSION,
             f"unsupported version {doc['version']!r} (expected {TABLE_FORMAT_VERSION})",
             "version")

    raw_generators = doc["generators"]
    _require(isinstance(raw_generators, list), "generators must be an array", "generators")
    labels: List[str] = []
    inverses: List[int] = []
    for i, entry in enumerate(raw_generators):
        where = f"generators[{i}]"
        _require(isinstance(entry, dict) and "label" in entry and "inverse_index" in entry,
                 "generator entries need 'label' and 'inverse_index'", where)
        _require(isinstance(entry["label"], str) and entry["label"] not in ("", "1"),
                 "generator label must be a non-empty string other than '1'", where)
        _require(_is_int(entry["inverse_index"]), "inverse_index must be an integer", where)
        labels.append(entry["label"])
        inverses.append(entry["inverse_index"])
    generators = GeneratorSet(tuple(labels), tuple(inverses))
    n_gen = len(generators)

    radius = doc["radius"]
    _require(_is_int(radius) and radius >= 0, "radius must be a non-negative integer", "radius")

    elements = doc["elements"]
    _require(isinstance(elements, list) and elements, "elements must be a non-empty array",
             "elements")
    words: List[Word] = []
    for i, entry in enumerate(elements):
        where = f"elements[{i}]"
        _require(isinstance(entry, dict) and "id" in entry and "word" in entry,
                 "element entries need 'id' and 'word'", where)
        _require(entry["id"] == i, f"element ids must be dense and ordered (expected {i})", where)
        word = entry["word"]
        _require(isinstance(word, list) and all(_is_int(x) and 0 <= x < n_gen for x in word),
                 "word must be an array of generator indices", where)
        words.append(tuple(word))
    _require(words[0] == (), "identity must have id 0 and the empty word", "elements[0]")
    _require(len(set(words)) == len(words), "element words must be distinct", "elements")
    if len(words) > max_ball_size:
        raise FormatError(
            f"table holds {len(words)} elements, above the cap of {max_ball_size}",
            field="elements",
        )

    adjacency = doc["adjacency"]
    n = len(words)
    _require(isinstance(adjacency, list) and len(adjacency) == n,
             "adjacency must have one row per element", "adjacency")
    for g, row in enumerate(adjacency):
        where = f"adjacency[{g}]"
        _require(isinstance(row, list) and len(row) == n_gen,
                 "adjacency rows must be parallel to generators", where)
        for i, h in enumerate(row):
            _require(_is_int(h) and -1 <= h < n, f"neighbor {h!r} is not an element id or -1",
                     f"{where}[{i}]")
            if h >= 0:
                _require(adjacency[h][generators.inverse_of[i]] == g,
                         f"adjacency is not symmetric: {g} -{labels[i]}-> {h} has no inverse edge",
                         f"{where}[{i}]")

    model = TableModel(generators, radius, words, adjacency, delta=delta,
                       max_ball_size=max_ball_size, source=str(path))

    lengths = model._lengths
    for g in range(n):
        where = f"elements[{g}]"
        _require(g in lengths, "element is not connected to the identity", where)
        _require(lengths[g] <= radius,
                 f"element lies at distance {lengths[g]} beyond the declared radius {radius}",
                 where)
        _require(len(words[g]) == lengths[g], "element word is not geodesic", where)
        if lengths[g] < radius:
            _require(all(h >= 0 for h in adjacency[g]),
                     "interior element is missing a neighbor", f"adjacency[{g}]")
        try:
            reached = model._follow(0, words[g])
        except OutOfLoadedBall as e:
            raise FormatError("element word leaves the loaded ball", field=where) from e
        _require(reached == g, "element word does not lead to the element", where)

    logger.info(f"✅ Loaded table model: {n} elements, radius {radius}, {n_gen} generators")
    return model


def export_ball(model: GroupModel, radius: int, path: Union[str, Path]) -> int:
    """
    Write B(1, radius) of a model as a Table-Model file.

    Elements are numbered in ball order (identity first) and carry their
    canonical geodesic word; products leaving the ball are marked -1.

    Returns:
        Number of exported elements
    """
    logger.info(f"Exporting B(1,{radius}) of {model.kind} model to {path}")
    ball = model.ball(model.identity, radius)
    index = {g.id: k for k, g in enumerate(ball)}
    generator_elements = [model.normalize((i,)) for i in range(len(model.generators))]

    adjacency: List[List[int]] = []
    for g in ball:
        row: List[int] = []
        for s in generator_elements:
            try:
                row.append(index.get(model.multiply(g, s).id, -1))
            except OutOfLoadedBall:
                row.append(-1)
        adjacency.append(row)

    doc = {
        "version": TABLE_FORMAT_VERSION,
        "generators": [
            {"label": label, "inverse_index": model.generators.inverse_of[i]}
            for i, label in enumerate(model.generators.symbols)
        ],
        "radius": radius,
        "elements": [
            {"id": k, "word": list(model.geodesic_word(model.identity, g))}
            for k, g in enumerate(ball)
        ],
        "adjacency": adjacency,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))
    logger.info(f"✅ Exported {len(ball)} elements")
    return len(ball)
