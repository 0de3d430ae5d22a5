"""List of CRDTs: insert, delete and apply on a list whose values are CRDTs."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Any, Iterator

from .causal import (
    CausalGapError,
    Dot,
    Envelope,
    ReplicaId,
    VectorClock,
    deliverable,
    missing_dependencies,
    record_delivery,
)
from .elements import ClockContext, effect, generate
from .positions import NEG_INF, POS_INF, Position, between


class IntegrityError(RuntimeError):
    """Replica state would break a structural invariant (e.g. duplicate position)."""


@dataclass(frozen=True)
class InsertPayload:
    p: Position
    sigma0: Any

    kind = "insert"


@dataclass(frozen=True)
class DeletePayload:
    p: Position

    kind = "delete"


@dataclass(frozen=True)
class ApplyPayload:
    p: Position
    op: Any

    kind = "apply"


@dataclass
class Element:
    p: Position
    sigma: Any
    t: Dot


class CrdtList:
    """One replica of a list of CRDTs.

    Generators run atomically with their local effector and return the
    envelope to broadcast. Remote envelopes go through ``receive``, which
    enforces causal, exactly-once delivery.
    """

    def __init__(self, replica_id: ReplicaId):
        self.replica_id = replica_id
        self.vc = VectorClock()
        self.seq = 0
        self._elts: list[Element] = []
        self._keys: list[Position] = []

    # queries

    def elements(self) -> list[tuple[Position, Any]]:
        return [(e.p, e.sigma) for e in self._elts]

    def values(self) -> list[Any]:
        return [e.sigma for e in self._elts]

    def positions(self) -> list[Position]:
        return list(self._keys)

    def entries(self) -> list[Element]:
        """Copies of the (p, sigma, t) triples."""
        return [Element(e.p, e.sigma, e.t) for e in self._elts]

    def __len__(self) -> int:
        return len(self._elts)

    def __iter__(self) -> Iterator[Any]:
        return iter(self.values())

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.replica_id!r}, {len(self)} elements)"

    def position_at(self, i: int) -> Position:
        if not 0 <= i < len(self._elts):
            raise IndexError(f"index {i} out of range for list of length {len(self)}")
        return self._keys[i]

    def index_of(self, p: Position) -> int | None:
        i = bisect.bisect_left(self._keys, p)
        if i < len(self._keys) and self._keys[i] == p:
            return i
        return None

    def find(self, p: Position) -> Element | None:
        i = self.index_of(p)
        return None if i is None else self._elts[i]

    # generators

    def _next(self) -> tuple[Dot, VectorClock]:
        v = self.vc.incremented(self.replica_id)
        return Dot(self.replica_id, v[self.replica_id]), v

    def insert(self, i: int, sigma0) -> Envelope:
        if not 0 <= i <= len(self._elts):
            raise IndexError(f"insert index {i} out of range for list of length {len(self)}")
        left = self._keys[i - 1] if i > 0 else NEG_INF
        right = self._keys[i] if i < len(self._keys) else POS_INF
        p = between(left, right, self.replica_id, self.seq)
        self.seq += 1
        dot, v = self._next()
        return self.receive(Envelope(dot, v, InsertPayload(p, sigma0)))

    def delete(self, i: int) -> Envelope:
        return self.delete_at(self.position_at(i))

    def delete_at(self, p: Position) -> Envelope:
        if self.find(p) is None:
            raise KeyError(f"no element at {p}")
        dot, v = self._next()
        return self.receive(Envelope(dot, v, DeletePayload(p)))

    def apply(self, i: int, op) -> Envelope:
        return self.apply_at(self.position_at(i), op)

    def apply_at(self, p: Position, op) -> Envelope:
        elt = self.find(p)
        if elt is None:
            raise KeyError(f"no element at {p}")
        dot, v = self._next()
        m = generate(op, elt.sigma, ClockContext(v, dot))
        return self.receive(Envelope(dot, v, ApplyPayload(p, m)))

    # delivery

    def receive(self, env: Envelope) -> Envelope:
        """Deliver ``env``; raises AlreadyDelivered or CausalGapError."""
        if not deliverable(env, self.vc):
            gaps = ", ".join(map(str, missing_dependencies(env, self.vc)))
            raise CausalGapError(
                f"replica {self.replica_id} cannot deliver {env.dot}: missing {gaps}"
            )
        handler = getattr(self, f"_effect_{env.kind}", None)
        if handler is None:
            raise TypeError(f"{type(self).__name__} has no effector for {env.kind!r}")
        handler(env)
        return env

    def _effect_insert(self, env: Envelope) -> Element:
        self.vc = record_delivery(env, self.vc)
        p = env.payload.p
        i = bisect.bisect_left(self._keys, p)
        if i < len(self._keys) and self._keys[i] == p:
            raise IntegrityError(f"duplicate position {p} from {env.dot}")
        elt = Element(p, env.payload.sigma0, env.dot)
        self._keys.insert(i, p)
        self._elts.insert(i, elt)
        return elt

    def _effect_delete(self, env: Envelope) -> None:
        self.vc = record_delivery(env, self.vc)
        self._remove(env.payload.p)

    def _effect_apply(self, env: Envelope) -> None:
        self.vc = record_delivery(env, self.vc)
        elt = self.find(env.payload.p)
        if elt is not None:
            elt.sigma = effect(env.payload.op, ClockContext(env.vc, env.dot), elt.sigma)

    def _remove(self, p: Position) -> bool:
        i = self.index_of(p)
        if i is None:
            return False
        del self._keys[i]
        del self._elts[i]
        return True
