"""Element CRDTs that live inside the list, and their operations.

Every state is an immutable value. ``effect`` returns a new state and never
touches the old one. Operations flagged ``pure`` are their own messages:
``generate(op, state, ctx) is op`` for every state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

from .causal import Dot, VectorClock


class SchemaError(TypeError):
    """An operation was sent to an element CRDT that does not understand it."""


@dataclass(frozen=True)
class ClockContext:
    """Causal identity of the message being effected.

    For apply messages this is the apply envelope's own dot and clock; for
    for-each messages it is the for-each's. It is the same on every replica.
    """

    w: VectorClock
    dot: Dot

    @property
    def stamp(self) -> tuple[int, str, int]:
        # Causally later writes always carry a larger clock total.
        return (self.w.total(), self.dot.sender, self.dot.clock)


_NO_STAMP = (-1, "", 0)


def _stamp_of(dot: Dot | None, total: int) -> tuple[int, str, int]:
    return _NO_STAMP if dot is None else (total, dot.sender, dot.clock)


# Operations ---------------------------------------------------------------


@dataclass(frozen=True)
class AttrSet:
    key: str
    value: Any

    tag = "attr_set"
    pure = True


@dataclass(frozen=True)
class NameSet:
    value: str

    tag = "name_set"
    pure = True


@dataclass(frozen=True)
class AmountMult:
    factor: Fraction

    tag = "amount_mult"
    pure = True

    def __post_init__(self):
        object.__setattr__(self, "factor", Fraction(self.factor))
        if self.factor <= 0:
            raise ValueError(f"amount multiplier must be positive, got {self.factor}")


@dataclass(frozen=True)
class Vec2Mult:
    """Left-multiply a vector by a 2x2 matrix ``((a, b), (c, d))``."""

    matrix: tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]

    tag = "vec2_mult"
    pure = True

    def __post_init__(self):
        (a, b), (c, d) = self.matrix
        object.__setattr__(
            self, "matrix", ((Fraction(a), Fraction(b)), (Fraction(c), Fraction(d)))
        )


def attr_set(key: str, value: Any) -> AttrSet:
    return AttrSet(key, value)


def amount_mult(s) -> AmountMult:
    return AmountMult(Fraction(s))


def vec2_mult(matrix) -> Vec2Mult:
    return Vec2Mult(matrix)


def rotation(cos, sin) -> Vec2Mult:
    """Clockwise rotation matrix ``[[c, s], [-s, c]]`` from exact entries."""
    c, s = Fraction(cos), Fraction(sin)
    return Vec2Mult(((c, s), (-s, c)))


# States -------------------------------------------------------------------


@dataclass(frozen=True)
class Register:
    """Last-writer-wins register. The initial value has no writer."""

    value: Any
    dot: Dot | None = None
    total: int = 0

    kind = "register"

    @property
    def stamp(self):
        return _stamp_of(self.dot, self.total)

    def effect(self, msg, ctx: ClockContext) -> Register:
        if not isinstance(msg, NameSet):
            raise SchemaError(f"register cannot effect {type(msg).__name__}")
        if ctx.stamp > self.stamp:
            return Register(msg.value, ctx.dot, ctx.w.total())
        return self


@dataclass(frozen=True)
class AttrMap:
    """Map of formatting attributes; each key is a last-writer-wins register."""

    entries: Mapping[str, Register] = field(default_factory=dict)

    kind = "attrs"

    def __hash__(self):
        return hash(tuple(sorted(self.entries.items())))

    def get(self, key: str, default=None):
        reg = self.entries.get(key)
        return default if reg is None else reg.value

    def values(self) -> dict[str, Any]:
        return {k: r.value for k, r in sorted(self.entries.items())}

    def effect(self, msg, ctx: ClockContext) -> AttrMap:
        if not isinstance(msg, AttrSet):
            raise SchemaError(f"attribute map cannot effect {type(msg).__name__}")
        current = self.entries.get(msg.key)
        if current is not None and ctx.stamp <= current.stamp:
            return self
        entries = dict(self.entries)
        entries[msg.key] = Register(msg.value, ctx.dot, ctx.w.total())
        return AttrMap(entries)


@dataclass(frozen=True)
class RichChar:
    char: str
    attrs: AttrMap = field(default_factory=AttrMap)

    kind = "rich_char"

    def __post_init__(self):
        if len(self.char) != 1:
            raise ValueError(f"rich character holds exactly one character, got {self.char!r}")

    def effect(self, msg, ctx: ClockContext) -> RichChar:
        if isinstance(msg, AttrSet):
            return RichChar(self.char, self.attrs.effect(msg, ctx))
        raise SchemaError(f"rich character cannot effect {type(msg).__name__}")


@dataclass(frozen=True)
class Amount:
    value: Fraction
    unit: str = ""

    kind = "amount"

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))

    def effect(self, msg, ctx: ClockContext) -> Amount:
        if isinstance(msg, AmountMult):
            return Amount(self.value * msg.factor, self.unit)
        raise SchemaError(f"amount cannot effect {type(msg).__name__}")


@dataclass(frozen=True)
class Ingredient:
    name: Register
    amount: Amount

    kind = "ingredient"

    @classmethod
    def new(cls, name: str, amount, unit: str = "") -> Ingredient:
        return cls(Register(name), Amount(Fraction(amount), unit))

    def effect(self, msg, ctx: ClockContext) -> Ingredient:
        if isinstance(msg, AmountMult):
            return Ingredient(self.name, self.amount.effect(msg, ctx))
        if isinstance(msg, NameSet):
            return Ingredient(self.name.effect(msg, ctx), self.amount)
        raise SchemaError(f"ingredient cannot effect {type(msg).__name__}")


@dataclass(frozen=True)
class Vec2:
    x: Fraction
    y: Fraction

    kind = "vec2"

    def __post_init__(self):
        object.__setattr__(self, "x", Fraction(self.x))
        object.__setattr__(self, "y", Fraction(self.y))

    def effect(self, msg, ctx: ClockContext) -> Vec2:
        if isinstance(msg, Vec2Mult):
            (a, b), (c, d) = msg.matrix
            return Vec2(a * self.x + b * self.y, c * self.x + d * self.y)
        raise SchemaError(f"vector cannot effect {type(msg).__name__}")


# Generator / effector -----------------------------------------------------


def is_pure(op) -> bool:
    return getattr(op, "pure", False)


def generate(op, state, ctx: ClockContext):
    """The element CRDT's generator: turn a user operation into a message."""
    if is_pure(op):
        return op
    gen = getattr(op, "generate", None)
    if gen is None:
        raise SchemaError(f"{type(op).__name__} is not an element operation")
    return gen(state, ctx)


def effect(msg, ctx: ClockContext, state):
    """The element CRDT's effector."""
    eff = getattr(state, "effect", None)
    if eff is None:
        raise SchemaError(f"{type(state).__name__} is not an element state")
    return eff(msg, ctx)
