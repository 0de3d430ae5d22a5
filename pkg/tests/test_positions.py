import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foreach_crdt.positions import (
    NEG_INF,
    POS_INF,
    Position,
    PositionError,
    between,
    bound_lt,
    compare,
    parse_bound,
)


def ref_compare(a, b):
    """Independent lexicographic order: pairwise, then shorter prefix first."""
    for (da, aa), (db, ab) in zip(a.path, b.path):
        if da != db:
            return -1 if da < db else 1
        if aa != ab:
            return -1 if aa < ab else 1
    return (len(a.path) > len(b.path)) - (len(a.path) < len(b.path))


P = Position.of


def test_compare_examples():
    assert compare(P((1, "A")), P((2, "A"))) == -1
    assert compare(P((1, "A")), P((1, "A"))) == 0
    assert compare(P((1, "A")), P((1, "A"), (0, "B"))) == -1
    assert compare(P((1, "B")), P((1, "A"), (9, "Z"))) == 1


def test_between_first_element_convention():
    assert between(NEG_INF, POS_INF, "A", 0) == P((1, "A"))


def test_between_adjacent_digits_descends():
    p = between(P((1, "A")), P((2, "A")), "B", 0)
    assert P((1, "A")) < p < P((2, "A"))
    assert str(p) == "1.A/1.B"


def test_between_rejects_empty_interval():
    with pytest.raises(PositionError):
        between(P((2, "A")), P((1, "A")), "A", 0)
    with pytest.raises(PositionError):
        between(P((1, "A")), P((1, "A")), "A", 0)
    with pytest.raises(PositionError):
        between(POS_INF, NEG_INF, "A", 0)


def test_text_form_round_trips():
    p = P((1, "A"), (1, "B"))
    assert str(p) == "1.A/1.B"
    assert Position.parse("1.A/1.B") == p
    assert parse_bound("-inf") is NEG_INF and parse_bound("+inf") is POS_INF
    with pytest.raises(PositionError):
        Position.parse("x.A")
    with pytest.raises(PositionError):
        Position(())


def test_thousand_head_inserts_strictly_decreasing():
    made = []
    right = POS_INF
    for counter in range(1000):
        p = between(NEG_INF, right, "A", counter)
        made.append(p)
        right = p
    # brute-force sort-and-scan
    for a, b in zip(made, made[1:]):
        assert ref_compare(b, a) == -1
    assert len(set(made)) == len(made)


def test_tail_appends_stay_short():
    left = NEG_INF
    for counter in range(500):
        p = between(left, POS_INF, "A", counter)
        assert bound_lt(left, p)
        left = p
    assert len(left.path) <= 2


def test_between_unique_for_distinct_authors_and_counters():
    a, b = P((1, "A")), P((2, "A"))
    made = {between(a, b, r, c) for r in "ABC" for c in range(20)}
    assert len(made) == 60
    assert all(a < p < b for p in made)


def test_reinsertion_after_delete_never_reuses_a_position():
    # Delete the only element between two neighbours and reinsert many times.
    left, right = P((1, "A")), P((2, "A"))
    seen = set()
    for counter in range(200):
        p = between(left, right, "B", counter)
        assert p not in seen
        seen.add(p)


pairs = st.tuples(st.integers(0, 4), st.sampled_from("ABC"))
positions = st.lists(pairs, min_size=1, max_size=4).map(lambda xs: Position(tuple(xs)))
# Generated positions always end in a digit >= 1; the density property is
# stated over that reachable set.
reachable = st.tuples(
    st.lists(pairs, max_size=3), st.integers(1, 4), st.sampled_from("ABC")
).map(lambda t: Position(tuple(t[0]) + ((t[1], t[2]),)))


@given(positions, positions)
def test_compare_matches_reference(a, b):
    assert compare(a, b) == ref_compare(a, b)


@settings(max_examples=300)
@given(reachable, reachable, st.sampled_from("ABCD"), st.integers(0, 50))
def test_density(a, b, author, counter):
    if a == b:
        return
    lo, hi = (a, b) if ref_compare(a, b) < 0 else (b, a)
    p = between(lo, hi, author, counter)
    assert ref_compare(lo, p) == -1 and ref_compare(p, hi) == -1


@settings(max_examples=50)
@given(st.integers(0, 2**32))
def test_random_insertion_runs_keep_order_and_uniqueness(seed):
    rng = random.Random(seed)
    seq = []
    counters = {}
    for _ in range(60):
        i = rng.randint(0, len(seq))
        author = rng.choice("ABC")
        c = counters.get(author, 0)
        counters[author] = c + 1
        left = seq[i - 1] if i else NEG_INF
        right = seq[i] if i < len(seq) else POS_INF
        seq.insert(i, between(left, right, author, c))
    assert all(ref_compare(x, y) == -1 for x, y in zip(seq, seq[1:]))
