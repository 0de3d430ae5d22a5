import random

import pytest

from foreach_crdt.causal import Dot, Envelope, VectorClock
from foreach_crdt.codec import state_bytes
from foreach_crdt.crdt_list import DeletePayload
from foreach_crdt.elements import RichChar, attr_set
from foreach_crdt.foreach_list import DEL, Apply, ForEachList, Gate, HalfOpen, MutationFn
from foreach_crdt.fuzz import FuzzConfig, generate, random_schedules
from foreach_crdt.oracle import (
    DELETED,
    History,
    HistoryError,
    ScheduleError,
    check_convergence,
    expected_element_state,
    validate_schedule,
)
from foreach_crdt.positions import Position

BOLD = Apply(attr_set("bold", True))


def test_untouched_element_keeps_initial_state():
    a = ForEachList("A")
    e = a.insert(0, RichChar("q"))
    assert expected_element_state(History([e]), e) == RichChar("q")


def test_single_replica_history_is_trivially_convergent():
    a = ForEachList("A")
    envs = [a.insert(0, RichChar("q")), a.apply(0, attr_set("bold", True))]
    h = History(envs)
    report = check_convergence(h, [{"A": [e.dot for e in envs]}])
    assert report.ok


def _bold_history():
    a, b = ForEachList("A"), ForEachList("B")
    base = [a.insert(i, RichChar(c)) for i, c in enumerate("over dog")]
    for e in base:
        b.receive(e)
    p = a.positions()
    fe = a.for_each(MutationFn(HalfOpen(p[0], p[4]), Gate.ANY, BOLD))
    typed = [b.insert(4 + i, RichChar(c)) for i, c in enumerate(" the")]
    return History(base + [fe] + typed), typed, fe


def test_concurrent_mid_range_insertion_is_expected_bold():
    h, typed, _ = _bold_history()
    for ins in typed:
        assert expected_element_state(h, ins).attrs.get("bold") is True


def test_two_replicas_concurrent_insert_and_foreach_both_orders():
    h, typed, fe = _bold_history()
    base = [e.dot for e in h if e.dot.sender == "A" and e is not fe]
    order1 = base + [fe.dot] + [e.dot for e in typed]
    order2 = base + [e.dot for e in typed] + [fe.dot]
    report = check_convergence(h, [{"A": order1, "B": order2}, {"A": order2, "B": order1}])
    assert report.converged and report.oracle_match


def test_deletion_law_delete_message_and_del_instruction():
    a, b = ForEachList("A"), ForEachList("B")
    e1, e2 = a.insert(0, RichChar("x")), a.insert(1, RichChar("y"))
    b.receive(e1), b.receive(e2)
    d = b.delete(0)
    fe = a.for_each(MutationFn(HalfOpen(e2.payload.p, Position.of((9, "Z"))), Gate.PRIOR_ONLY, DEL))
    h = History([e1, e2, d, fe])
    assert expected_element_state(h, e1) is DELETED
    assert expected_element_state(h, e2) is DELETED


@pytest.mark.parametrize("seed", range(12))
def test_random_eight_message_histories(seed):
    cfg = FuzzConfig(ops=8, replicas=3, seed=seed)
    net = generate(cfg, seed)
    h = History(net.sent)
    rng = random.Random(seed)
    report = check_convergence(h, random_schedules(h, net.ids, 20, rng))
    assert report.ok, report.diffs
    # The fold must not depend on which linear extension is used.
    for ins in h.inserts():
        base = expected_element_state(h, ins)
        for k in range(5):
            other = expected_element_state(h, ins, random.Random(k))
            assert (other is DELETED) == (base is DELETED)
            if base is not DELETED:
                assert state_bytes(other) == state_bytes(base)


def _env(sender, clock, vc, p=Position.of((1, "A"))):
    return Envelope(Dot(sender, clock), VectorClock(vc), DeletePayload(p))


def test_history_validation_errors():
    a = ForEachList("A")
    ins = a.insert(0, RichChar("x"))
    with pytest.raises(HistoryError, match="duplicate"):
        History([ins, ins])
    with pytest.raises(HistoryError, match="missing A:1"):
        History([_env("A", 2, {"A": 2})])
    with pytest.raises(HistoryError, match="never saw"):
        History([ins, _env("B", 1, {"B": 1})])
    with pytest.raises(HistoryError, match="not in the history"):
        History([ins, _env("A", 2, {"A": 2, "C": 1})])
    with pytest.raises(HistoryError):
        expected_element_state(History([ins]), _env("A", 1, {"A": 1}))


def test_schedule_violations_name_the_envelope():
    a, b = ForEachList("A"), ForEachList("B")
    e1 = a.insert(0, RichChar("x"))
    b.receive(e1)
    e2 = b.apply(0, attr_set("bold", True))
    h = History([e1, e2])
    validate_schedule(h, [e1.dot, e2.dot])
    with pytest.raises(ScheduleError) as err:
        validate_schedule(h, [e2.dot, e1.dot], "R")
    assert err.value.envelope == e2 and "B:1 delivered before A:1" in str(err.value)
    with pytest.raises(ScheduleError, match="twice"):
        validate_schedule(h, [e1.dot, e1.dot, e2.dot])
    with pytest.raises(ScheduleError, match="never delivered"):
        validate_schedule(h, [e1.dot])
    with pytest.raises(ScheduleError):
        check_convergence(h, [{"R": [e2.dot, e1.dot]}])


def test_report_flags_a_broken_replica():
    h, typed, fe = _bold_history()
    broken = lambda r: ForEachList(r, skip_buffer=True)  # noqa: E731
    late = [e.dot for e in h if e is not fe] + [fe.dot]
    early = [e.dot for e in h if e.dot.sender == "A"] + [e.dot for e in typed]
    # For-each delivered last: its own loop reaches the typed text.
    assert check_convergence(h, [{"A": late}], factory=broken).ok
    # For-each delivered first: only the buffer could format the typed text.
    report = check_convergence(h, [{"A": late, "B": early}], factory=broken)
    assert not report.converged and not report.oracle_match
    assert report.to_json()["diffs"]
