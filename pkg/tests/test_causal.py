import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from foreach_crdt.causal import (
    AlreadyDelivered,
    Dot,
    Envelope,
    VectorClock,
    deliverable,
    dot_is_concurrent,
    dot_is_prior,
    happened_before,
    missing_dependencies,
    record_delivery,
)
from foreach_crdt.crdt_list import DeletePayload
from foreach_crdt.oracle import History, validate_schedule
from foreach_crdt.positions import Position


def env(sender, clock, vc):
    return Envelope(Dot(sender, clock), VectorClock(vc), DeletePayload(Position.of((1, "Z"))))


def test_dot_is_prior_examples():
    assert dot_is_prior(Dot("A", 3), VectorClock({"A": 5}))
    assert not dot_is_prior(Dot("A", 3), VectorClock({"A": 2}))
    assert not dot_is_prior(Dot("B", 1), VectorClock({"A": 7}))


def test_dot_is_concurrent_examples():
    assert dot_is_concurrent(Dot("A", 4), VectorClock({"A": 3, "B": 9}))
    assert not dot_is_concurrent(Dot("A", 4), VectorClock({"A": 4}))
    assert dot_is_concurrent(Dot("C", 1), VectorClock())


def test_deliverable_examples():
    assert deliverable(env("A", 1, {"A": 1}), VectorClock())
    assert not deliverable(env("A", 2, {"A": 2, "B": 1}), VectorClock({"A": 1}))
    assert deliverable(env("A", 2, {"A": 2, "B": 1}), VectorClock({"A": 1, "B": 1}))


def test_deliverable_with_missing_b_names_the_gap():
    e = env("A", 2, {"A": 2, "B": 1})
    assert missing_dependencies(e, VectorClock({"A": 1})) == [Dot("B", 1)]


def test_derived_deliverable_example_passes_schedule_validator():
    a1 = env("A", 1, {"A": 1})
    b1 = env("B", 1, {"A": 1, "B": 1})
    a2 = env("A", 2, {"A": 2, "B": 1})
    h = History([a1, b1, a2], validate=False)
    validate_schedule(h, [a1.dot, b1.dot, a2.dot])
    local = VectorClock()
    for e in (a1, b1, a2):
        assert deliverable(e, local)
        local = record_delivery(e, local)


def test_duplicate_is_rejected():
    with pytest.raises(AlreadyDelivered):
        deliverable(env("A", 1, {"A": 1}), VectorClock({"A": 1}))


def test_record_delivery_examples():
    assert record_delivery(env("B", 1, {"A": 1, "B": 1}), VectorClock({"A": 1})) == {"A": 1, "B": 1}
    assert record_delivery(env("A", 1, {"A": 1}), VectorClock()) == {"A": 1}
    assert record_delivery(env("A", 4, {"A": 4, "B": 2}), VectorClock({"A": 3, "B": 2})) == {"A": 4, "B": 2}


def test_vector_clock_omits_zeros_and_compares_as_mapping():
    vc = VectorClock({"A": 0, "B": 2})
    assert vc.to_json() == {"B": 2}
    assert vc["A"] == 0 and "A" not in vc
    assert vc == {"B": 2}
    assert hash(vc) == hash(VectorClock({"B": 2}))
    with pytest.raises(ValueError):
        VectorClock({"A": -1})


def test_envelope_rejects_inconsistent_clock():
    with pytest.raises(ValueError):
        env("A", 2, {"A": 1})


clocks = st.dictionaries(st.sampled_from("ABCD"), st.integers(0, 6), max_size=4)


@given(clocks, st.sampled_from("ABCD"), clocks)
def test_record_delivery_equals_merge_under_gate(local, sender, extra):
    local = VectorClock(local)
    # Build the most general deliverable envelope over this local clock.
    vc = {r: min(n, local[r]) for r, n in extra.items() if r != sender}
    vc[sender] = local[sender] + 1
    e = env(sender, vc[sender], vc)
    assert deliverable(e, local)
    assert record_delivery(e, local) == local.merge(e.vc)


# Brute force: simulate every small history with explicit "has seen" sets as
# ground truth for causality, and compare against the clock tests.


class _Model:
    def __init__(self, replicas):
        self.vc = {r: VectorClock() for r in replicas}
        self.seen = {r: frozenset() for r in replicas}
        self.sent = []  # (envelope, frozenset of dots seen by the sender)
        self.inbox = {r: [] for r in replicas}


def _histories(replicas, limit, rng=None, samples=None):
    """All (or ``samples`` random) runs with up to ``limit`` sends."""

    def moves(m):
        out = []
        if len(m.sent) < limit:
            out += [("send", r) for r in replicas]
        for r in replicas:
            for i, e in enumerate(m.inbox[r]):
                if deliverable(e, m.vc[r]):
                    out.append(("recv", r, i))
        return out

    def apply(m, move):
        n = _Model(replicas)
        n.vc, n.seen = dict(m.vc), dict(m.seen)
        n.sent, n.inbox = list(m.sent), {r: list(q) for r, q in m.inbox.items()}
        if move[0] == "send":
            r = move[1]
            v = n.vc[r].incremented(r)
            e = env(r, v[r], v)
            n.sent.append((e, n.seen[r]))
            n.vc[r] = v
            n.seen[r] = n.seen[r] | {e.dot}
            for other in replicas:
                if other != r:
                    n.inbox[other].append(e)
        else:
            _, r, i = move
            e = n.inbox[r].pop(i)
            n.vc[r] = record_delivery(e, n.vc[r])
            seen_by_sender = dict((x.dot, s) for x, s in n.sent)[e.dot]
            n.seen[r] = n.seen[r] | seen_by_sender | {e.dot}
        return n

    if samples is None:
        stack = [_Model(replicas)]
        while stack:
            m = stack.pop()
            options = moves(m)
            if not options:
                yield m
                continue
            stack.extend(apply(m, mv) for mv in options)
    else:
        for _ in range(samples):
            m = _Model(replicas)
            while True:
                options = moves(m)
                if not options:
                    break
                m = apply(m, rng.choice(options))
            yield m


def _check_partition(model):
    for (ins, seen_i), (fe, seen_f) in itertools.permutations(model.sent, 2):
        ins_before = ins.dot in seen_f
        fe_before = fe.dot in seen_i
        concurrent = not ins_before and not fe_before
        assert sum([ins_before, fe_before, concurrent]) == 1
        assert dot_is_prior(ins.dot, fe.vc) == ins_before
        assert happened_before(ins.vc, fe.vc) == ins_before
        if not ins_before:
            assert dot_is_concurrent(fe.dot, ins.vc) == concurrent


def test_prior_concurrent_future_partition_exhaustive_two_replicas():
    count = 0
    for model in _histories(["A", "B"], limit=4):
        _check_partition(model)
        count += 1
    assert count > 500


def test_prior_concurrent_future_partition_random_six_messages():
    rng = random.Random(11)
    for model in _histories(["A", "B", "C"], limit=6, rng=rng, samples=1500):
        assert len(model.sent) == 6
        _check_partition(model)
