from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from morphsynth.model import CompatTable
from morphsynth.quality import (
    Dominance,
    MissingCompatError,
    QualityVector,
    dominates,
    ideal_point,
    pareto_layers,
    quality_of,
    tier_counts,
    weakly_dominates,
)

Q = QualityVector


def test_str_and_parse_round_trip():
    q = Q(3, (3, 1, 0))
    assert str(q) == "(3;3,1,0)"
    assert QualityVector.parse(" ( 3 ; 3, 1, 0 ) ") == q


def test_equality_ignores_trailing_zero_tiers():
    assert Q(3, (2, 0)) == Q(3, (2, 0, 0, 0))
    assert hash(Q(3, (2, 0))) == hash(Q(3, (2,)))
    assert Q(3, (2, 0)) != Q(2, (2, 0))
    assert Q(3, (2, 1)) != Q(3, (2, 0, 1))


def test_padded():
    assert Q(2, (2,)).padded(3).n == (2, 0, 0)
    assert Q(2, (2, 0, 0, 0)).padded(2).n == (2, 0)
    with pytest.raises(ValueError):
        Q(2, (1, 1)).padded(1)


@pytest.mark.parametrize("a, b, expected", [
    (Q(3, (4, 0, 0)), Q(3, (3, 1, 0)), Dominance.STRICTLY_DOMINATES),
    (Q(2, (4, 0, 0)), Q(3, (3, 1, 0)), Dominance.INCOMPARABLE_OR_DOMINATED),
    (Q(3, (3, 1, 0)), Q(2, (4, 0, 0)), Dominance.INCOMPARABLE_OR_DOMINATED),
    (Q(3, (4, 0, 0)), Q(3, (4, 0, 0)), Dominance.EQUAL),
    (Q(3, (3, 1, 0)), Q(3, (4, 0, 0)), Dominance.INCOMPARABLE_OR_DOMINATED),
    (Q(3, (1, 0, 2)), Q(3, (0, 3, 0)), Dominance.INCOMPARABLE_OR_DOMINATED),
    (Q(3, (1, 2, 0)), Q(3, (1, 0, 2)), Dominance.STRICTLY_DOMINATES),
])
def test_dominates_examples(a, b, expected):
    assert dominates(a, b) is expected


def test_quality_of_single_pick_is_vacuous_scale():
    q = quality_of([(("J", "J1"), 1)], CompatTable(3), depth=1)
    assert q == Q(3, (1,))


def test_quality_of_minimum_over_cross_pairs():
    table = CompatTable(3, {
        frozenset({("A", "a"), ("B", "b")}): 3,
        frozenset({("A", "a"), ("C", "c")}): 1,
        frozenset({("B", "b"), ("C", "c")}): 2,
    })
    picks = [(("A", "a"), 1), (("B", "b"), 2), (("C", "c"), 1)]
    assert quality_of(picks, table, depth=3) == Q(1, (2, 1, 0))
    # restricting to the first pair only
    assert quality_of(picks, table, depth=3, pairs=[(0, 1)]).w == 3


def test_quality_of_missing_entry():
    picks = [(("A", "a"), 1), (("B", "b"), 1)]
    with pytest.raises(MissingCompatError, match=r"\(A.a,B.b\)"):
        quality_of(picks, CompatTable(3), depth=1)
    assert quality_of(picks, CompatTable(3), depth=1, assume_missing=2).w == 2


def test_tier_counts_grows_when_needed():
    assert tier_counts([1, 3, 3], 2) == (1, 0, 2)
    with pytest.raises(ValueError):
        tier_counts([0], 2)


def test_pareto_layers_basic():
    items = [("a", Q(2, (4, 0, 0))), ("b", Q(3, (3, 1, 0))), ("c", Q(2, (3, 1, 0))), ("d", Q(1, (2, 2, 0)))]
    layers = pareto_layers(items)
    assert [[i for i, _ in layer] for layer in layers] == [["b", "a"], ["c"], ["d"]]
    assert pareto_layers(items, depth=1) == [layers[0]]


def test_pareto_layers_ties_by_id():
    items = [("z", Q(3, (2,))), ("a", Q(3, (2,)))]
    assert pareto_layers(items) == [[("a", Q(3, (2,))), ("z", Q(3, (2,)))]]


def test_pareto_layers_singleton_and_empty():
    assert pareto_layers([("x", Q(1, (1,)))]) == [[("x", Q(1, (1,)))]]
    assert pareto_layers([]) == []
    with pytest.raises(ValueError):
        pareto_layers([("x", Q(1, (1,)))], depth=0)


vectors = st.builds(
    lambda w, n: Q(w, tuple(n)),
    st.integers(0, 3),
    st.lists(st.integers(0, 4), min_size=1, max_size=4),
)


@given(vectors)
def test_reflexive(a):
    assert dominates(a, a) is Dominance.EQUAL


@given(vectors, vectors)
def test_antisymmetric(a, b):
    if weakly_dominates(a, b) and weakly_dominates(b, a):
        assert a == b


@given(vectors, vectors, vectors)
def test_transitive(a, b, c):
    if weakly_dominates(a, b) and weakly_dominates(b, c):
        assert weakly_dominates(a, c)


@given(vectors, vectors, st.integers(0, 3))
def test_padding_never_changes_verdict(a, b, extra):
    padded = Q(a.w, a.n + (0,) * extra)
    assert dominates(padded, b) is dominates(a, b)
    assert dominates(b, padded) is dominates(b, a)


@given(st.lists(vectors, min_size=1, max_size=12))
def test_first_layer_not_dominated(qs):
    items = list(enumerate(qs))
    front = pareto_layers(items, depth=1)[0]
    for _, q in front:
        assert not any(dominates(other, q) is Dominance.STRICTLY_DOMINATES for _, other in items)
    # every item lands in exactly one layer
    layers = pareto_layers(items)
    assert sorted(i for layer in layers for i, _ in layer) == list(range(len(qs)))


@given(st.integers(1, 5), st.lists(st.tuples(st.integers(1, 3), st.integers(1, 3)), min_size=1, max_size=5))
def test_ideal_point_dominates_feasible(m, picks):
    picks = picks[:m]
    m = len(picks)
    q = Q(min(w for w, _ in picks), tier_counts([p for _, p in picks], 3))
    assert weakly_dominates(ideal_point(m, 3, 3), q)


@given(st.permutations([0, 1, 2]))
def test_quality_of_permutation_invariant(order):
    table = CompatTable(3, {
        frozenset({("A", "a"), ("B", "b")}): 3,
        frozenset({("A", "a"), ("C", "c")}): 2,
        frozenset({("B", "b"), ("C", "c")}): 1,
    })
    picks = [(("A", "a"), 1), (("B", "b"), 3), (("C", "c"), 2)]
    shuffled = [picks[i] for i in order]
    assert quality_of(shuffled, table, 3) == quality_of(picks, table, 3)
