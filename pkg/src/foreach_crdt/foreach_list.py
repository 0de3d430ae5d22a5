"""For-each on the list of CRDTs.

``ForEachList.for_each(f)`` applies ``f`` to every element whose insert is
causally prior or concurrent to the for-each, on every replica, whatever the
delivery order. Concurrent inserts that arrive after the for-each are caught
by the buffer of received for-each messages.

``f`` is a ``MutationFn``: a small serializable description of a function
from ``(position, prior)`` to an instruction (apply a pure op, delete, or
nothing).
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field
from typing import Any, Callable, Union

from .causal import Dot, Envelope, VectorClock, dot_is_concurrent, dot_is_prior, record_delivery
from .crdt_list import CrdtList, Element, IntegrityError
from .elements import ClockContext, SchemaError, effect, is_pure
from .positions import NEG_INF, POS_INF, Position, PositionBound, between, bound_lt

# Predicates ---------------------------------------------------------------


@dataclass(frozen=True)
class All:
    def __contains__(self, p: Position) -> bool:
        return True


@dataclass(frozen=True)
class HalfOpen:
    """``start <= p < end``; either bound may be infinite."""

    start: PositionBound
    end: PositionBound

    def __contains__(self, p: Position) -> bool:
        return not bound_lt(p, self.start) and bound_lt(p, self.end)


@dataclass(frozen=True)
class Closed:
    """``start <= p <= end_prime``."""

    start: PositionBound
    end_prime: PositionBound

    def __contains__(self, p: Position) -> bool:
        return not bound_lt(p, self.start) and not bound_lt(self.end_prime, p)


@dataclass(frozen=True)
class IdSet:
    """Membership in a fixed set of positions, ignoring their order."""

    ids: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "ids", frozenset(self.ids))

    def __contains__(self, p: Position) -> bool:
        return p in self.ids


Predicate = Union[All, HalfOpen, Closed, IdSet]


class Gate(enum.Enum):
    ANY = "any"
    PRIOR_ONLY = "prior_only"
    CONCURRENT_ONLY = "concurrent_only"

    def admits(self, prior: bool) -> bool:
        if self is Gate.ANY:
            return True
        return prior if self is Gate.PRIOR_ONLY else not prior


# Instructions -------------------------------------------------------------


@dataclass(frozen=True)
class Apply:
    op: Any

    def __post_init__(self):
        if not is_pure(self.op):
            raise SchemaError(f"for-each can only apply pure operations, got {type(self.op).__name__}")


class _Marker:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name

    def __reduce__(self):
        return self.name


DEL = _Marker("DEL")
NULL = _Marker("NULL")

Instruction = Union[Apply, _Marker]


@dataclass(frozen=True)
class MutationFn:
    predicate: Predicate = field(default_factory=All)
    gate: Gate = Gate.ANY
    instruction: Instruction = NULL

    def __call__(self, p: Position, prior: bool) -> Instruction:
        return eval_mutation(self, p, prior)


def eval_mutation(f: MutationFn, p: Position, prior: bool) -> Instruction:
    if p in f.predicate and f.gate.admits(prior):
        return f.instruction
    return NULL


def run_instruction(instruction: Instruction, ctx: ClockContext, sigma):
    """New element state, or DEL if the element goes away."""
    if instruction is NULL:
        return sigma
    if instruction is DEL:
        return DEL
    return effect(instruction.op, ctx, sigma)


@dataclass(frozen=True)
class ForEachPayload:
    f: MutationFn

    kind = "foreach"


@dataclass(frozen=True)
class BufferEntry:
    f: MutationFn
    u: Dot
    w: VectorClock


# The replicated list ------------------------------------------------------


class ForEachList(CrdtList):
    """List of CRDTs with the for-each operation.

    ``skip_buffer`` disables the concurrent-insert loop; it exists only so the
    fuzzer can prove it notices the breakage.
    ``on_evaluate(f_dot, elt_dot, prior)`` is called for every evaluation of a
    for-each function, if given.
    """

    def __init__(
        self,
        replica_id,
        *,
        skip_buffer: bool = False,
        on_evaluate: Callable[[Dot, Dot, bool], None] | None = None,
    ):
        super().__init__(replica_id)
        self.buffer: list[BufferEntry] = []
        self.skip_buffer = skip_buffer
        self.on_evaluate = on_evaluate

    def for_each(self, f: MutationFn) -> Envelope:
        dot, w = self._next()
        return self.receive(Envelope(dot, w, ForEachPayload(f)))

    def for_each_prior(self, f: MutationFn) -> list[Envelope]:
        """A literal loop over the local elements, one message per affected element.

        Concurrently inserted elements are never touched.
        """
        sent = []
        for p in self.positions():
            instruction = f(p, True)
            if instruction is DEL:
                sent.append(self.delete_at(p))
            elif instruction is not NULL:
                sent.append(self.apply_at(p, instruction.op))
        return sent

    def _execute(self, entry: BufferEntry, elt: Element, prior: bool) -> bool:
        """Run ``entry.f`` on ``elt`` locally. Returns False if it deleted it."""
        if self.on_evaluate is not None:
            self.on_evaluate(entry.u, elt.t, prior)
        result = run_instruction(entry.f(elt.p, prior), ClockContext(entry.w, entry.u), elt.sigma)
        if result is DEL:
            self._remove(elt.p)
            return False
        elt.sigma = result
        return True

    def _effect_insert(self, env: Envelope) -> Element:
        elt = super()._effect_insert(env)
        if self.skip_buffer:
            return elt
        v = env.vc
        for entry in self.buffer:
            if dot_is_concurrent(entry.u, v) and not self._execute(entry, elt, False):
                break
        return elt

    def _effect_foreach(self, env: Envelope) -> None:
        self.vc = record_delivery(env, self.vc)
        entry = BufferEntry(env.payload.f, env.dot, env.vc)
        for elt in list(self._elts):
            self._execute(entry, elt, dot_is_prior(elt.t, entry.w))
        self.buffer.append(entry)


# Lists as element CRDTs ---------------------------------------------------


@dataclass(frozen=True)
class NestedForEach:
    """Pure op running a for-each inside an element that is itself a list.

    The inner for-each borrows the clock context of the message carrying it.
    """

    f: MutationFn

    tag = "nested_foreach"
    pure = True


def nested_foreach(f: MutationFn) -> NestedForEach:
    return NestedForEach(f)


@dataclass(frozen=True)
class InnerInsert:
    """Message inserting ``sigma0`` at ``p`` in an inner list; not pure."""

    p: Position
    sigma0: Any

    tag = "list_insert"
    pure = False


@dataclass(frozen=True)
class InsertAt:
    """User operation: insert into an inner list at an index (``None`` = append)."""

    sigma0: Any
    index: int | None = None

    pure = False

    def generate(self, state: InnerList, ctx: ClockContext) -> InnerInsert:
        if not isinstance(state, InnerList):
            raise SchemaError(f"cannot insert into {type(state).__name__}")
        n = len(state.elts)
        i = n if self.index is None else self.index
        if not 0 <= i <= n:
            raise IndexError(f"insert index {i} out of range for inner list of length {n}")
        left = state.elts[i - 1].p if i > 0 else NEG_INF
        right = state.elts[i].p if i < n else POS_INF
        # The carrying message's dot is unique, so it doubles as the counter.
        return InnerInsert(between(left, right, ctx.dot.sender, ctx.dot.clock), self.sigma0)


@dataclass(frozen=True)
class InnerElement:
    p: Position
    sigma: Any
    t: Dot


@dataclass(frozen=True)
class InnerList:
    """A list of CRDTs used as the value of an outer list element.

    Inner elements take the dot of the message that inserted them, and inner
    for-each operations take the dot and clock of the message that carried
    them, so prior/concurrent classification uses the outer causal order.
    """

    elts: tuple[InnerElement, ...] = ()
    buffer: tuple[BufferEntry, ...] = ()

    kind = "list"

    def values(self) -> list[Any]:
        return [e.sigma for e in self.elts]

    def effect(self, msg, ctx: ClockContext) -> InnerList:
        if isinstance(msg, InnerInsert):
            return self._insert(msg, ctx)
        if isinstance(msg, NestedForEach):
            return self._for_each(msg.f, ctx)
        raise SchemaError(f"inner list cannot effect {type(msg).__name__}")

    def _insert(self, msg: InnerInsert, ctx: ClockContext) -> InnerList:
        keys = [e.p for e in self.elts]
        i = bisect.bisect_left(keys, msg.p)
        if i < len(keys) and keys[i] == msg.p:
            raise IntegrityError(f"duplicate inner position {msg.p}")
        sigma = msg.sigma0
        for entry in self.buffer:
            if dot_is_concurrent(entry.u, ctx.w):
                sigma = run_instruction(
                    entry.f(msg.p, False), ClockContext(entry.w, entry.u), sigma
                )
                if sigma is DEL:
                    return self
        elts = self.elts[:i] + (InnerElement(msg.p, sigma, ctx.dot),) + self.elts[i:]
        return InnerList(elts, self.buffer)

    def _for_each(self, f: MutationFn, ctx: ClockContext) -> InnerList:
        kept = []
        for elt in self.elts:
            sigma = run_instruction(f(elt.p, dot_is_prior(elt.t, ctx.w)), ctx, elt.sigma)
            if sigma is not DEL:
                kept.append(InnerElement(elt.p, sigma, elt.t))
        return InnerList(tuple(kept), self.buffer + (BufferEntry(f, ctx.dot, ctx.w),))
