"""
Tests for the group models: free groups, free products of finite cyclic
groups and table models loaded from Cayley-ball files.

Run:
    python -m pytest tests/test_group_models.py -v
"""

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.chains.chain import Chain0
from src.groups.elements import ElementTable, GeneratorSet
from src.exceptions import BudgetExceeded, DomainError, FormatError, OutOfLoadedBall
from src.groups.free_group import FreeGroup
from src.groups.free_product import FreeProductFiniteCyclic
from src.groups.model_factory import get_group_model
from src.groups.table_model import export_ball, load_table_model
from src.utils.config import Settings
from src.utils.validators import ValidationError, parse_word


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _free_group(rank: int = 2) -> FreeGroup:
    return FreeGroup(rank)


def _modular() -> FreeProductFiniteCyclic:
    """Z/2 * Z/3 with generators s, t, t^-1."""
    return FreeProductFiniteCyclic((2, 3))


def _word(model, text: str):
    return model.normalize(parse_word(text, model.generators))


def _table_doc(model, radius: int) -> dict:
    ball = model.ball(model.identity, radius)
    index = {g.id: k for k, g in enumerate(ball)}
    letters = [model.normalize((i,)) for i in range(len(model.generators))]
    adjacency = []
    for g in ball:
        row = []
        for s in letters:
            h = model.multiply(g, s)
            row.append(index.get(h.id, -1))
        adjacency.append(row)
    return {
        "version": 1,
        "generators": [{"label": label, "inverse_index": inv}
                       for label, inv in zip(model.generators.symbols, model.generators.inverse_of)],
        "radius": radius,
        "elements": [{"id": k, "word": list(g.word)} for k, g in enumerate(ball)],
        "adjacency": adjacency,
    }


def _write_table(tmp_path, doc, name="ball.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


words = st.lists(st.integers(min_value=0, max_value=3), max_size=12)


# ===========================================================================
# 1. Generators and interning
# ===========================================================================

class TestGeneratorSet:

    def test_rejects_non_involutive_inverse(self):
        """inverse_of must pair generators symmetrically."""
        with pytest.raises(FormatError):
            GeneratorSet(("a", "b", "c"), (1, 2, 0))

    def test_rejects_duplicate_labels(self):
        """Generator labels must be distinct."""
        with pytest.raises(FormatError):
            GeneratorSet(("a", "a"), (1, 0))

    def test_invert_word(self):
        """Formal inverse reverses the word and inverts each letter."""
        gens = GeneratorSet(("a", "a^-1", "b", "b^-1"), (1, 0, 3, 2))
        assert gens.invert_word((0, 2)) == (3, 1)

    def test_reordered_permutes_inverses(self):
        """A new ShortLex order keeps every inverse pairing."""
        gens = GeneratorSet(("a", "a^-1", "b", "b^-1"), (1, 0, 3, 2))
        new, perm = gens.reordered(["b", "a", "b^-1", "a^-1"])
        assert new.symbols == ("b", "a", "b^-1", "a^-1")
        assert new.inverse_of == (2, 3, 0, 1)
        assert perm == [1, 3, 0, 2]

    def test_reordered_rejects_missing_label(self):
        """Every label must appear exactly once in a generator order."""
        gens = GeneratorSet(("a", "a^-1"), (1, 0))
        with pytest.raises(FormatError):
            gens.reordered(["a"])


class TestElementTable:

    def test_identity_has_id_zero(self):
        """The empty word is always element 0."""
        table = ElementTable()
        assert table.get(0).word == ()
        assert table.get(0).is_identity

    def test_interning_is_idempotent(self):
        """The same word always yields the same element."""
        table = ElementTable()
        first = table.intern((0, 2))
        assert table.intern((0, 2)) is first
        assert len(table) == 2

    def test_rank_function_fixes_ids(self):
        """With a rank function, ids come from the rank, not insertion order."""
        table = ElementTable(rank=lambda word: 10 * len(word) + word[-1])
        assert table.intern((0, 3)).id == 23
        assert table.intern((1,)).id == 11
        assert table.get(23).word == (0, 3)

    def test_capacity_raises_budget_exceeded(self):
        """A full table refuses new elements."""
        table = ElementTable(capacity=2)
        table.intern((0,))
        with pytest.raises(BudgetExceeded):
            table.intern((1,))


# ===========================================================================
# 2. Free groups
# ===========================================================================

class TestFreeGroup:

    def test_free_reduction(self):
        """a a^-1 reduces to the identity."""
        model = _free_group()
        assert model.normalize((0, 1)).is_identity
        assert model.normalize((0, 2, 3, 1)).is_identity

    def test_ball_sizes(self):
        """|B(1,n)| = 2·3^n − 1 in F2."""
        model = _free_group()
        assert model.ball_size(2) == 17
        assert model.ball_size(7) == 4373

    def test_distance_is_reduced_length(self):
        """d(a, b) is the length of the reduced word of a⁻¹b."""
        model = _free_group()
        assert model.distance(_word(model, "a b"), _word(model, "a b^-1")) == 2
        assert model.distance(_word(model, "a"), _word(model, "a a a")) == 2

    def test_ball_around_other_center_has_same_size(self):
        """Balls are translates of the identity ball."""
        model = _free_group()
        center = _word(model, "a b a")
        ball = model.ball(center, 2)
        assert len(ball) == 17
        assert all(model.distance(center, x) <= 2 for x in ball)

    def test_sphere_is_ball_shell(self):
        """S(1,2) holds exactly the length-2 elements."""
        model = _free_group()
        assert len(model.sphere(model.identity, 2)) == 12

    def test_generator_order_is_used(self):
        """A custom generator order changes the labels' indices."""
        model = FreeGroup(2, ["b", "b^-1", "a", "a^-1"])
        assert model.generators.symbols[0] == "b"
        assert model.render(model.normalize((0, 2))) == "b a"

    def test_rank_must_be_positive(self):
        """Rank 0 is not a free group model."""
        with pytest.raises(DomainError):
            FreeGroup(0)

    def test_invalid_generator_index(self):
        """Indices beyond the generating set are rejected."""
        with pytest.raises(DomainError):
            _free_group().normalize((7,))

    def test_ball_cap_raises_budget_exceeded(self):
        """Balls larger than max_ball_size are refused."""
        model = FreeGroup(2, max_ball_size=100)
        with pytest.raises(BudgetExceeded):
            model.ball(model.identity, 5)

    @settings(max_examples=50, deadline=None)
    @given(x=words, y=words, z=words)
    def test_multiplication_is_associative(self, x, y, z):
        """(xy)z = x(yz) for arbitrary words."""
        model = _free_group()
        a, b, c = model.normalize(x), model.normalize(y), model.normalize(z)
        assert model.multiply(model.multiply(a, b), c) == model.multiply(a, model.multiply(b, c))

    @settings(max_examples=50, deadline=None)
    @given(x=words)
    def test_inverse_cancels(self, x):
        """g·g⁻¹ = 1."""
        model = _free_group()
        g = model.normalize(x)
        assert model.multiply(g, model.inverse(g)).is_identity

    @settings(max_examples=50, deadline=None)
    @given(x=words, y=words, z=words)
    def test_distance_is_left_invariant(self, x, y, z):
        """d(ga, gb) = d(a, b)."""
        model = _free_group()
        g, a, b = model.normalize(x), model.normalize(y), model.normalize(z)
        assert model.distance(model.multiply(g, a), model.multiply(g, b)) == model.distance(a, b)


# ===========================================================================
# 3. Free products of finite cyclic groups
# ===========================================================================

class TestFreeProduct:

    @pytest.mark.parametrize("n", range(1, 11))
    def test_sphere_sizes(self, n):
        """|S(1,n)| = 2^⌊n/2⌋ + 2^⌈n/2⌉ in Z/2 * Z/3."""
        model = _modular()
        assert len(model.sphere(model.identity, n)) == 2 ** (n // 2) + 2 ** ((n + 1) // 2)

    def test_ball_sizes(self):
        """|B(1,7)| = 74, |B(1,10)| = 218, |B(1,12)| = 442."""
        model = _modular()
        assert model.ball_size(7) == 74
        assert model.ball_size(10) == 218
        assert model.ball_size(12) == 442

    def test_distance_to_st(self):
        """d(1, st) = 2."""
        model = _modular()
        assert model.distance(model.identity, _word(model, "st")) == 2

    def test_syllables_reduce_mod_order(self):
        """s s = 1 and t t t = 1; t t is written t^-1."""
        model = _modular()
        assert _word(model, "s s").is_identity
        assert _word(model, "t t t").is_identity
        assert model.render(_word(model, "t t")) == "t^-1"

    def test_half_order_syllable_uses_earlier_letter(self):
        """In Z/4 the syllable t² is spelled with the ShortLex-first letter."""
        model = FreeProductFiniteCyclic((4,))
        assert model.render(_word(model, "s^-1 s^-1")) == "s s"

    def test_orders_must_be_at_least_two(self):
        """Z/1 is not a valid factor."""
        with pytest.raises(DomainError):
            FreeProductFiniteCyclic((1, 3))


# ===========================================================================
# 4. Table models
# ===========================================================================

class TestTableModel:

    def test_export_then_load_agrees_with_algebraic_model(self, tmp_path):
        """An exported ball reproduces distances and balls of its source."""
        source = _modular()
        path = tmp_path / "ball.json"
        count = export_ball(source, 6, path)
        table = load_table_model(path, delta=1)
        assert count == source.ball_size(6) == len(table)
        assert table.ball_size(3) == source.ball_size(3)
        a, b = _word(table, "s t"), _word(table, "t^-1 s")
        assert table.distance(a, b) == source.distance(_word(source, "s t"), _word(source, "t^-1 s"))

    def test_geodesic_word_is_shortlex_least(self, tmp_path):
        """Table geodesic words agree with the normal form of the source model."""
        source = _free_group()
        table = load_table_model(_write_table(tmp_path, _table_doc(source, 3)))
        g = _word(table, "a b^-1 a")
        assert table.geodesic_word(table.identity, g) == _word(source, "a b^-1 a").word

    def test_leaving_the_ball_raises(self, tmp_path):
        """Products beyond the loaded radius raise OutOfLoadedBall."""
        table = load_table_model(_write_table(tmp_path, _table_doc(_free_group(), 2)))
        g = _word(table, "a a")
        with pytest.raises(OutOfLoadedBall):
            table.multiply(g, g)

    def test_ball_beyond_radius_raises(self, tmp_path):
        """B(x, k) must fit inside the loaded ball."""
        table = load_table_model(_write_table(tmp_path, _table_doc(_free_group(), 2)))
        with pytest.raises(OutOfLoadedBall):
            table.ball(_word(table, "a"), 2)

    def test_malformed_json_reports_line(self, tmp_path):
        """Broken JSON becomes a FormatError carrying the line number."""
        path = tmp_path / "broken.json"
        path.write_text('{\n"version": 1,\n', encoding="utf-8")
        with pytest.raises(FormatError) as exc:
            load_table_model(path)
        assert exc.value.line is not None

    def test_missing_field(self, tmp_path):
        """Every top-level field is required."""
        doc = _table_doc(_free_group(), 1)
        del doc["adjacency"]
        with pytest.raises(FormatError) as exc:
            load_table_model(_write_table(tmp_path, doc))
        assert exc.value.field == "adjacency"

    def test_asymmetric_adjacency(self, tmp_path):
        """An edge without its inverse edge is rejected."""
        doc = _table_doc(_free_group(), 1)
        doc["adjacency"][1][1] = 2
        with pytest.raises(FormatError):
            load_table_model(_write_table(tmp_path, doc))

    def test_identity_must_come_first(self, tmp_path):
        """Element 0 must carry the empty word."""
        doc = _table_doc(_free_group(), 1)
        doc["elements"][0]["word"] = [0]
        with pytest.raises(FormatError):
            load_table_model(_write_table(tmp_path, doc))

    def test_wrong_version(self, tmp_path):
        """Only version 1 files load."""
        doc = _table_doc(_free_group(), 1)
        doc["version"] = 2
        with pytest.raises(FormatError):
            load_table_model(_write_table(tmp_path, doc))


# ===========================================================================
# 5. Canonical element ids
# ===========================================================================

def _shortlex(g):
    return (len(g.word), g.word)


class TestCanonicalIds:

    def test_ids_do_not_depend_on_first_use(self):
        """Two models interning in opposite orders agree on every id."""
        forward, backward = _free_group(), _free_group()
        a1, b1 = _word(forward, "a"), _word(forward, "b")
        b2, a2 = _word(backward, "b"), _word(backward, "a")
        assert (a1.id, b1.id) == (a2.id, b2.id) == (1, 3)

    def test_chain_order_does_not_depend_on_first_use(self):
        """Serialized terms come out in the same order whatever was computed first."""
        forward, backward = _free_group(), _free_group()
        a1, b1 = _word(forward, "a"), _word(forward, "b")
        b2, a2 = _word(backward, "b"), _word(backward, "a")
        half = Fraction(1, 2)
        assert Chain0([(b1, half), (a1, half)]).to_json() == Chain0([(a2, half), (b2, half)]).to_json()

    @pytest.mark.parametrize("model,radius", [
        (FreeGroup(2), 4),
        (FreeGroup(2, ["b", "a^-1", "b^-1", "a"]), 3),
        (FreeProductFiniteCyclic((2, 3)), 9),
        (FreeProductFiniteCyclic((4, 3)), 5),
    ])
    def test_ball_ids_are_shortlex_ranks(self, model, radius):
        """B(1, n) carries exactly the ids 0 .. |B(1, n)| − 1, ordered ShortLex."""
        ball = model.ball(model.identity, radius)
        by_id = sorted(ball, key=lambda g: g.id)
        assert [g.id for g in by_id] == list(range(len(ball)))
        assert by_id == sorted(ball, key=_shortlex)

    @pytest.mark.parametrize("factory", [_free_group, _modular], ids=["free", "freeprod"])
    def test_element_inverts_rank(self, factory):
        """element(id) rebuilds the element, also on a fresh model."""
        model, fresh = factory(), factory()
        for g in model.ball(model.identity, 5):
            assert model.element(g.id) is g
            assert fresh.element(g.id).word == g.word

    def test_finite_group_has_no_larger_ids(self):
        """Z/4 has ids 0..3 only."""
        model = FreeProductFiniteCyclic((4,))
        assert [model.element(k).word for k in range(4)] == [(), (0,), (1,), (0, 0)]
        with pytest.raises(DomainError):
            model.element(4)

    def test_table_ids_follow_file_order(self, tmp_path):
        """Table models keep the ids of their file."""
        doc = _table_doc(_modular(), 3)
        table = load_table_model(_write_table(tmp_path, doc))
        for entry in doc["elements"]:
            assert table.element(entry["id"]).word == tuple(entry["word"])
        with pytest.raises(DomainError):
            table.element(len(doc["elements"]))


# ===========================================================================
# 6. Gromov products
# ===========================================================================

modular_words = st.lists(st.integers(min_value=0, max_value=2), max_size=12)


class TestGromovProduct:

    @pytest.mark.parametrize("b,c,expected", [
        ("a b", "a b^-1", 1),
        ("a", "a^-1", 0),
        ("a b a", "a b", 2),
        ("a a", "1", 0),
    ])
    def test_tree_values(self, b, c, expected):
        """In F2, (b|c)_1 is the length of the common prefix."""
        model = _free_group()
        assert model.gromov_product(model.identity, _word(model, b), _word(model, c)) == expected

    def test_half_integer_values(self):
        """In Z/2 * Z/3, an odd triangle perimeter gives a half-integer."""
        model = _modular()
        a, b, c = model.identity, _word(model, "t"), _word(model, "t^-1")
        assert model.gromov_product(a, b, c) == Fraction(1, 2)

    @settings(max_examples=60, deadline=None)
    @given(x=words, y=words, z=words)
    def test_free_group_bounds(self, x, y, z):
        """Symmetric in b, c and 0 <= (b|c)_a <= min(d(a,b), d(a,c))."""
        model = _free_group()
        a, b, c = model.normalize(x), model.normalize(y), model.normalize(z)
        product = model.gromov_product(a, b, c)
        assert product == model.gromov_product(a, c, b)
        assert 0 <= product <= min(model.distance(a, b), model.distance(a, c))
        assert (2 * product).denominator == 1

    @settings(max_examples=60, deadline=None)
    @given(x=modular_words, y=modular_words, z=modular_words)
    def test_free_product_bounds(self, x, y, z):
        """The same bounds hold in Z/2 * Z/3."""
        model = _modular()
        a, b, c = model.normalize(x), model.normalize(y), model.normalize(z)
        product = model.gromov_product(a, b, c)
        assert product == model.gromov_product(a, c, b)
        assert 0 <= product <= min(model.distance(a, b), model.distance(a, c))


# ===========================================================================
# 7. Model factory
# ===========================================================================

class TestModelFactory:

    def _settings(self):
        return Settings(workers=1)

    def test_free_defaults_delta_one(self):
        """free:<rank> builds a FreeGroup with δ = 1."""
        model = get_group_model("free:2", config=self._settings())
        assert isinstance(model, FreeGroup)
        assert model.delta == 1

    def test_freeprod_requires_delta(self):
        """Non-free groups need an explicit δ."""
        with pytest.raises(ValidationError):
            get_group_model("freeprod:2,3", config=self._settings())

    def test_freeprod_with_delta(self):
        """freeprod:<orders> builds the free product."""
        model = get_group_model("freeprod:2,3", delta=2, config=self._settings())
        assert isinstance(model, FreeProductFiniteCyclic)
        assert model.orders == (2, 3)
        assert model.delta == 2

    def test_table_spec_loads_file(self, tmp_path):
        """table:<path> loads a Table-Model file."""
        path = _write_table(tmp_path, _table_doc(_modular(), 3))
        model = get_group_model(f"table:{path}", delta=1, config=self._settings())
        assert model.kind == "table"
        assert model.radius == 3

    def test_table_rejects_generator_order(self, tmp_path):
        """A table's generator order is fixed by its file."""
        path = _write_table(tmp_path, _table_doc(_modular(), 2))
        with pytest.raises(ValidationError):
            get_group_model(f"table:{path}", delta=1, generator_order=["t", "s", "t^-1"],
                            config=self._settings())

    def test_fingerprint_depends_on_delta(self):
        """Models with different δ hash differently."""
        one = get_group_model("free:2", delta=1, config=self._settings())
        two = get_group_model("free:2", delta=2, config=self._settings())
        assert one.fingerprint() != two.fingerprint()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
