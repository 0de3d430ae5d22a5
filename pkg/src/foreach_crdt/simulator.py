"""Deterministic in-memory causal broadcast between replicas."""

from __future__ import annotations

import random
from collections import Counter, deque
from typing import Callable, Iterable, Sequence

from .causal import Dot, Envelope, deliverable
from .foreach_list import ForEachList


class RandomChooser:
    """Picks uniformly among the options with a seeded RNG."""

    def __init__(self, seed_or_rng=0):
        self.rng = seed_or_rng if isinstance(seed_or_rng, random.Random) else random.Random(seed_or_rng)

    def choose(self, n: int) -> int:
        return 0 if n == 1 else self.rng.randrange(n)


class ExhaustiveChooser:
    """Enumerates every sequence of choices, one run at a time.

    Usage::

        chooser = ExhaustiveChooser()
        while chooser.start_run():
            run(chooser)
    """

    def __init__(self, limit: int = 10_000):
        self.limit = limit
        self.runs = 0
        self._prefix: list[int] = []
        self._trail: list[tuple[int, int]] = []
        self._started = False

    def start_run(self) -> bool:
        if self._started:
            # Advance the deepest choice point that still has options left.
            while self._trail and self._trail[-1][0] + 1 >= self._trail[-1][1]:
                self._trail.pop()
            if not self._trail:
                return False
            last, n = self._trail.pop()
            self._prefix = [c for c, _ in self._trail] + [last + 1]
        self._started = True
        self._trail = []
        self.runs += 1
        if self.runs > self.limit:
            raise RuntimeError(f"more than {self.limit} schedules to enumerate")
        return True

    def choose(self, n: int) -> int:
        depth = len(self._trail)
        c = self._prefix[depth] if depth < len(self._prefix) else 0
        self._trail.append((c, n))
        return c


class Network:
    """Replicas plus per-replica queues of envelopes not yet delivered.

    Only the head of each sender's queue can ever be deliverable, so the
    scheduler chooses among at most one candidate per sender. Every delivery
    is checked against the causal gate and for duplicates.
    """

    def __init__(
        self,
        replica_ids: Sequence[str],
        factory: Callable[[str], ForEachList] = ForEachList,
    ):
        if not replica_ids:
            raise ValueError("need at least one replica")
        self.ids = list(replica_ids)
        self.replicas = {r: factory(r) for r in self.ids}
        self.pending: dict[str, dict[str, deque]] = {r: {} for r in self.ids}
        self.delivered: dict[str, set[Dot]] = {r: set() for r in self.ids}
        self.events: list[tuple] = []
        self.deliveries: list[tuple[str, Dot]] = []
        self.sent: list[Envelope] = []

    def __getitem__(self, replica_id: str) -> ForEachList:
        return self.replicas[replica_id]

    def counts(self) -> dict[str, int]:
        return dict(sorted(Counter(e.kind for e in self.sent).items()))

    def broadcast(self, envs: Envelope | Iterable[Envelope]) -> None:
        """Record envelopes the sender already applied locally and queue them for the rest."""
        if isinstance(envs, Envelope):
            envs = [envs]
        for env in envs:
            origin = env.dot.sender
            self.events.append(("send", env))
            self._mark(origin, env)
            self.sent.append(env)
            for r in self.ids:
                if r != origin:
                    self.pending[r].setdefault(origin, deque()).append(env)

    def _mark(self, replica_id: str, env: Envelope) -> None:
        if env.dot in self.delivered[replica_id]:
            raise AssertionError(f"{env.dot} delivered twice to {replica_id}")
        self.delivered[replica_id].add(env.dot)
        self.deliveries.append((replica_id, env.dot))
        self.events.append(("deliver", replica_id, env.dot))

    def candidates(self, replica_id: str) -> list[Envelope]:
        local = self.replicas[replica_id].vc
        out = []
        for sender in sorted(self.pending[replica_id]):
            queue = self.pending[replica_id][sender]
            if queue and deliverable(queue[0], local):
                out.append(queue[0])
        return out

    def has_pending(self, replica_id: str | None = None) -> bool:
        ids = self.ids if replica_id is None else [replica_id]
        return any(q for r in ids for q in self.pending[r].values())

    def deliver_one(self, replica_id: str, chooser) -> Envelope | None:
        options = self.candidates(replica_id)
        if not options:
            if self.has_pending(replica_id):
                raise AssertionError(f"replica {replica_id} has pending messages but none deliverable")
            return None
        env = options[chooser.choose(len(options))]
        replica = self.replicas[replica_id]
        before = replica.vc
        assert deliverable(env, before), f"scheduler picked undeliverable {env.dot}"
        self.pending[replica_id][env.dot.sender].popleft()
        self._mark(replica_id, env)
        replica.receive(env)
        return env

    def deliver_all_to(self, replica_id: str, chooser) -> int:
        n = 0
        while self.deliver_one(replica_id, chooser) is not None:
            n += 1
        return n

    def flush(self, chooser) -> None:
        """Deliver everything, replica by replica."""
        for r in self.ids:
            self.deliver_all_to(r, chooser)

    def check_exactly_once(self) -> None:
        """At quiescence, every replica delivered every sent dot exactly once."""
        everything = {e.dot for e in self.sent}
        per_replica = Counter(self.deliveries)
        for r in self.ids:
            if self.delivered[r] != everything:
                missing = sorted(everything - self.delivered[r])
                raise AssertionError(f"replica {r} missing {', '.join(map(str, missing[:5]))}")
        dupes = [k for k, n in per_replica.items() if n > 1]
        if dupes:
            raise AssertionError(f"duplicate deliveries {dupes[:5]}")

    def schedules(self) -> dict[str, list[Dot]]:
        """The delivery order each replica saw, including its own messages."""
        out: dict[str, list[Dot]] = {r: [] for r in self.ids}
        for r, dot in self.deliveries:
            out[r].append(dot)
        return out


def random_causal_order(envelopes: Sequence[Envelope], rng: random.Random) -> list[Dot]:
    """A uniformly chosen deliverable message at every step, until all are delivered."""
    queues: dict[str, deque] = {}
    for env in sorted(envelopes, key=lambda e: (e.dot.sender, e.dot.clock)):
        queues.setdefault(env.dot.sender, deque()).append(env)
    local: dict[str, int] = {}
    order = []
    senders = sorted(queues)
    while True:
        ready = [queues[s][0] for s in senders if queues[s] and deliverable(queues[s][0], local)]
        if not ready:
            break
        env = ready[rng.randrange(len(ready))]
        queues[env.dot.sender].popleft()
        local[env.dot.sender] = env.dot.clock
        order.append(env.dot)
    if any(queues.values()):
        raise ValueError("envelopes are not causally closed")
    return order
