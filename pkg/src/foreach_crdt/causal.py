"""Vector clocks, dots, envelopes and the causal delivery gate."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any, Iterator

ReplicaId = str


class DeliveryError(Exception):
    """An envelope cannot be delivered to a replica."""


class AlreadyDelivered(DeliveryError):
    """The envelope's dot was delivered before; the transport should drop it."""


class CausalGapError(DeliveryError):
    """The envelope depends on messages the replica has not delivered yet."""


class VectorClock(Mapping):
    """Immutable map from replica id to counter. Missing entries read as 0."""

    __slots__ = ("_entries", "_hash")

    def __init__(self, entries: Mapping[ReplicaId, int] | None = None):
        clean = {}
        for replica, count in (entries or {}).items():
            if count < 0:
                raise ValueError(f"negative clock entry {replica}={count}")
            if count:
                clean[replica] = int(count)
        self._entries = dict(sorted(clean.items()))
        self._hash = None

    def __getitem__(self, replica: ReplicaId) -> int:
        return self._entries.get(replica, 0)

    def __contains__(self, replica: object) -> bool:
        return replica in self._entries

    def __iter__(self) -> Iterator[ReplicaId]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, VectorClock):
            return self._entries == other._entries
        if isinstance(other, Mapping):
            return self == VectorClock(other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._entries.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"VectorClock({self._entries!r})"

    def incremented(self, replica: ReplicaId) -> VectorClock:
        return self.with_entry(replica, self[replica] + 1)

    def with_entry(self, replica: ReplicaId, count: int) -> VectorClock:
        entries = dict(self._entries)
        entries[replica] = count
        return VectorClock(entries)

    def merge(self, other: Mapping[ReplicaId, int]) -> VectorClock:
        entries = dict(self._entries)
        for replica, count in other.items():
            entries[replica] = max(entries.get(replica, 0), count)
        return VectorClock(entries)

    def dominated_by(self, other: Mapping[ReplicaId, int]) -> bool:
        """Componentwise ``self <= other``."""
        return all(count <= other.get(replica, 0) for replica, count in self._entries.items())

    def total(self) -> int:
        return sum(self._entries.values())

    def to_json(self) -> dict[str, int]:
        return dict(self._entries)


@dataclass(frozen=True, order=True)
class Dot:
    """One originated message, named by its sender and the sender's counter."""

    sender: ReplicaId
    clock: int

    def __post_init__(self):
        if self.clock < 1:
            raise ValueError(f"dot clock must be positive, got {self.clock}")

    def __str__(self) -> str:
        return f"{self.sender}:{self.clock}"

    def to_json(self) -> dict[str, Any]:
        return {"sender": self.sender, "clock": self.clock}


@dataclass(frozen=True)
class Envelope:
    """A broadcast message. ``payload.kind`` names the operation."""

    dot: Dot
    vc: VectorClock
    payload: Any

    def __post_init__(self):
        if self.vc[self.dot.sender] != self.dot.clock:
            raise ValueError(f"envelope {self.dot}: vc entry {self.vc[self.dot.sender]} != dot clock")

    @property
    def kind(self) -> str:
        return self.payload.kind


def dot_is_prior(t: Dot, w: Mapping[ReplicaId, int]) -> bool:
    """True if the operation named ``t`` happened before the one stamped ``w``."""
    return w.get(t.sender, 0) >= t.clock


def dot_is_concurrent(u: Dot, v: Mapping[ReplicaId, int]) -> bool:
    """True if an operation stamped ``v`` did not see the operation named ``u``.

    Only meaningful when ``v``'s operation is not causally before ``u``'s.
    """
    return v.get(u.sender, 0) < u.clock


def happened_before(a: Mapping[ReplicaId, int], b: Mapping[ReplicaId, int]) -> bool:
    """Strict componentwise order on clocks."""
    keys = set(a) | set(b)
    return all(a.get(k, 0) <= b.get(k, 0) for k in keys) and any(
        a.get(k, 0) < b.get(k, 0) for k in keys
    )


def deliverable(e: Envelope, local: Mapping[ReplicaId, int]) -> bool:
    """Whether ``e`` may be delivered next on a replica whose clock is ``local``.

    Raises AlreadyDelivered if the dot was delivered before.
    """
    sender = e.dot.sender
    if e.dot.clock <= local.get(sender, 0):
        raise AlreadyDelivered(f"{e.dot} already delivered")
    if e.dot.clock != local.get(sender, 0) + 1:
        return False
    return all(count <= local.get(r, 0) for r, count in e.vc.items() if r != sender)


def missing_dependencies(e: Envelope, local: Mapping[ReplicaId, int]) -> list[Dot]:
    """The dots ``e`` is waiting for, for error messages."""
    gaps = []
    for r, count in e.vc.items():
        have = local.get(r, 0)
        want = count - 1 if r == e.dot.sender else count
        gaps.extend(Dot(r, c) for c in range(have + 1, want + 1))
    return gaps


def record_delivery(e: Envelope, local: VectorClock) -> VectorClock:
    # Only the sender's entry moves; under the deliverable gate this equals a merge.
    return local.with_entry(e.dot.sender, e.dot.clock)
