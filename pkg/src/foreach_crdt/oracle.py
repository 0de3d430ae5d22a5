"""Reference semantics for the list with for-each, computed from a whole history.

Nothing here is incremental. The causal order is rebuilt from envelope
clocks alone, and each element's state is obtained by folding every message
that concerns it, in a linear extension of that order:

* applies addressed to the element's position,
* for-each messages causally after its insert, evaluated with prior=True,
* for-each messages concurrent with its insert, evaluated with prior=False,

stopping once a delete arrives or an evaluation returns DEL.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .causal import Dot, Envelope
from .codec import dumps, encode_elements, state_bytes
from .elements import ClockContext, effect
from .foreach_list import DEL, NULL, ForEachList


class HistoryError(ValueError):
    """The envelopes do not form a consistent causal history."""


class ScheduleError(ValueError):
    """A delivery order breaks causality or exactly-once delivery."""

    def __init__(self, message: str, envelope: Envelope | None = None):
        super().__init__(message)
        self.envelope = envelope


class _Deleted:
    def __repr__(self):
        return "DELETED"


DELETED = _Deleted()


def precedes(a: Envelope, b: Envelope) -> bool:
    """a happened before b: a's clock is componentwise <= b's and they differ."""
    if a.dot == b.dot:
        return False
    return all(count <= b.vc[r] for r, count in a.vc.items())


def _order_key(e: Envelope):
    # A larger clock total is necessary for being causally later.
    return (e.vc.total(), e.dot.sender, e.dot.clock)


@dataclass
class History:
    envelopes: tuple[Envelope, ...]
    by_dot: dict[Dot, Envelope] = field(init=False, repr=False)

    def __init__(self, envelopes: Iterable[Envelope], validate: bool = True):
        self.envelopes = tuple(sorted(envelopes, key=_order_key))
        self.by_dot = {}
        for e in self.envelopes:
            if e.dot in self.by_dot:
                raise HistoryError(f"duplicate dot {e.dot}")
            self.by_dot[e.dot] = e
        if validate:
            self.validate()

    def __len__(self):
        return len(self.envelopes)

    def __iter__(self):
        return iter(self.envelopes)

    def senders(self) -> list[str]:
        return sorted({e.dot.sender for e in self.envelopes})

    def validate(self) -> None:
        counts: dict[str, int] = {}
        for e in self.envelopes:
            counts[e.dot.sender] = max(counts.get(e.dot.sender, 0), e.dot.clock)
        for sender, n in counts.items():
            for c in range(1, n + 1):
                if Dot(sender, c) not in self.by_dot:
                    raise HistoryError(f"missing {sender}:{c} (sender reached {n})")
        for e in self.envelopes:
            for r, count in e.vc.items():
                if count > counts.get(r, 0):
                    raise HistoryError(f"{e.dot} depends on {r}:{count}, which is not in the history")
            if e.dot.clock > 1:
                before = self.by_dot[Dot(e.dot.sender, e.dot.clock - 1)]
                if not precedes(before, e):
                    raise HistoryError(f"{before.dot} and {e.dot} are not ordered by their clocks")
        inserts = {}
        for e in self.envelopes:
            if e.kind == "insert":
                if e.payload.p in inserts:
                    raise HistoryError(f"position {e.payload.p} inserted twice")
                inserts[e.payload.p] = e
        for e in self.envelopes:
            if e.kind in ("delete", "apply"):
                origin = inserts.get(e.payload.p)
                if origin is None or not precedes(origin, e):
                    raise HistoryError(f"{e.dot} targets {e.payload.p}, which it never saw inserted")

    def inserts(self) -> list[Envelope]:
        return [e for e in self.envelopes if e.kind == "insert"]

    def linear_extension(self, items: Sequence[Envelope], rng: random.Random | None = None):
        """Order ``items`` consistently with causality; random ties if ``rng``."""
        if rng is None:
            return sorted(items, key=_order_key)
        remaining = list(items)
        out = []
        while remaining:
            minimal = [e for e in remaining if not any(precedes(o, e) for o in remaining)]
            pick = rng.choice(minimal)
            remaining.remove(pick)
            out.append(pick)
        return out


def relevant_messages(h: History, insert: Envelope) -> list[tuple[Envelope, bool | None]]:
    """Messages that touch the inserted element, with the prior flag for for-eaches."""
    p = insert.payload.p
    out = []
    for e in h.envelopes:
        if e.kind in ("apply", "delete"):
            if e.payload.p == p:
                out.append((e, None))
        elif e.kind == "foreach":
            if precedes(insert, e):
                out.append((e, True))
            elif not precedes(e, insert):
                out.append((e, False))
    return out


def expected_element_state(h: History, insert: Envelope, rng: random.Random | None = None):
    """The element's state, or DELETED, after every message in ``h``."""
    if insert.kind != "insert" or h.by_dot.get(insert.dot) != insert:
        raise HistoryError(f"{insert.dot} is not an insert of this history")
    tagged = dict((e.dot, prior) for e, prior in relevant_messages(h, insert))
    order = h.linear_extension([h.by_dot[d] for d in tagged], rng)
    sigma = insert.payload.sigma0
    p = insert.payload.p
    for e in order:
        if e.kind == "delete":
            return DELETED
        if e.kind == "apply":
            sigma = effect(e.payload.op, ClockContext(e.vc, e.dot), sigma)
            continue
        instruction = e.payload.f(p, tagged[e.dot])
        if instruction is DEL:
            return DELETED
        if instruction is not NULL:
            sigma = effect(instruction.op, ClockContext(e.vc, e.dot), sigma)
    return sigma


def expected_document(h: History, rng: random.Random | None = None) -> list[tuple]:
    """All surviving elements in position order."""
    out = []
    for ins in h.inserts():
        sigma = expected_element_state(h, ins, rng)
        if sigma is not DELETED:
            out.append((ins.payload.p, sigma))
    out.sort(key=lambda pair: pair[0])
    return out


def element_diffs(h: History, elements: Sequence[tuple], expected: Sequence[tuple] | None = None) -> list[dict]:
    """Per-element disagreements between a replica and the oracle.

    Covers both the state fold and the deletion law.
    """
    if expected is None:
        expected = expected_document(h)
    want = {str(p): state_bytes(s) for p, s in expected}
    got = {str(p): state_bytes(s) for p, s in elements}
    diffs = []
    for key in sorted(set(want) | set(got)):
        if want.get(key) != got.get(key):
            diffs.append({"p": key, "expected": want.get(key, "DELETED"), "actual": got.get(key, "DELETED")})
    return diffs


def validate_schedule(h: History, order: Sequence[Dot], replica: str = "?") -> None:
    """Every message exactly once, each after everything it causally depends on."""
    seen: dict[str, int] = {}
    delivered = set()
    for dot in order:
        e = h.by_dot.get(dot)
        if e is None:
            raise ScheduleError(f"replica {replica}: {dot} is not in the history")
        if dot in delivered:
            raise ScheduleError(f"replica {replica}: {dot} delivered twice", e)
        for r, count in e.vc.items():
            need = count - 1 if r == dot.sender else count
            if seen.get(r, 0) < need:
                raise ScheduleError(
                    f"replica {replica}: {dot} delivered before {r}:{seen.get(r, 0) + 1}", e
                )
        delivered.add(dot)
        seen[dot.sender] = dot.clock
    if len(delivered) != len(h):
        missing = sorted(set(h.by_dot) - delivered)
        raise ScheduleError(f"replica {replica}: never delivered {', '.join(map(str, missing[:5]))}")


@dataclass
class ConvergenceReport:
    snapshots: dict[str, str]
    converged: bool
    oracle_match: bool
    diffs: dict[str, list[dict]]

    @property
    def ok(self) -> bool:
        return self.converged and self.oracle_match

    def to_json(self) -> dict:
        return {
            "converged": self.converged,
            "oracle_match": self.oracle_match,
            "replicas": sorted(self.snapshots),
            "diffs": self.diffs,
        }


def check_convergence(
    h: History,
    schedules: Sequence[Mapping[str, Sequence[Dot]]],
    factory: Callable[[str], ForEachList] = ForEachList,
    extra: Mapping[str, Sequence[tuple]] | None = None,
) -> ConvergenceReport:
    """Replay ``h`` on fresh replicas, one per (schedule, replica) order.

    ``extra`` adds element lists obtained elsewhere (e.g. the replicas of the
    run that produced ``h``) to the comparison.
    """
    expected = expected_document(h)
    expected_snap = dumps(encode_elements(expected))
    results: dict[str, list[tuple]] = dict(extra or {})
    for i, schedule in enumerate(schedules):
        for replica_id, order in sorted(schedule.items()):
            validate_schedule(h, order, replica_id)
            replica = factory(replica_id)
            for dot in order:
                replica.receive(h.by_dot[dot])
            results[f"{i}/{replica_id}"] = replica.elements()
    snapshots = {name: dumps(encode_elements(els)) for name, els in results.items()}
    converged = len(set(snapshots.values())) <= 1
    diffs = {}
    for name, els in sorted(results.items()):
        if snapshots[name] != expected_snap:
            diffs[name] = element_diffs(h, els, expected)
    return ConvergenceReport(snapshots, converged, not diffs, diffs)
