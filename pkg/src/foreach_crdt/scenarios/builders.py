"""Mutation functions for the rich-text, recipe and slideshow editors."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

from ..elements import AmountMult, AttrSet, Vec2, Vec2Mult, rotation
from ..foreach_list import (
    DEL,
    All,
    Apply,
    Closed,
    ForEachList,
    Gate,
    HalfOpen,
    IdSet,
    InsertAt,
    MutationFn,
    NestedForEach,
)
from ..positions import Position, PositionBound, bound_lt

HALF_OPEN = "half_open"
CLOSED = "closed"


def rich_text_bold(start: PositionBound, end: PositionBound, mode: str = HALF_OPEN,
                   key: str = "bold", value=True) -> MutationFn:
    """Format a range, including characters inserted concurrently inside it.

    ``HALF_OPEN`` takes ``end`` as the position just past the range and also
    formats concurrent insertions at the range's end. ``CLOSED`` takes the
    last formatted position and does not (the usual hyperlink behavior).
    """
    if mode == HALF_OPEN:
        if not bound_lt(start, end):
            raise ValueError("empty format range")
        pred = HalfOpen(start, end)
    elif mode == CLOSED:
        if bound_lt(end, start):
            raise ValueError("empty format range")
        pred = Closed(start, end)
    else:
        raise ValueError(f"unknown range mode {mode!r}")
    return MutationFn(pred, Gate.ANY, Apply(AttrSet(key, value)))


def rich_text_delete_range(start: PositionBound, end: PositionBound) -> MutationFn:
    """Delete ``[start, end)``, sparing text inserted concurrently."""
    if bound_lt(end, start):
        raise ValueError("delete range ends before it starts")
    return MutationFn(HalfOpen(start, end), Gate.PRIOR_ONLY, DEL)


def scale_recipe(s) -> MutationFn:
    """Multiply every amount, including concurrently added ingredients."""
    return MutationFn(All(), Gate.ANY, Apply(AmountMult(Fraction(s))))


def rotate_group(objects: Iterable[Position], matrix) -> MutationFn:
    """Transform every translation vector of the selected objects.

    Translations added concurrently to those objects are transformed too, so
    they stay aligned with the rotated group.
    """
    ids = frozenset(objects)
    if not ids:
        raise ValueError("rotate_group needs at least one object")
    inner = MutationFn(All(), Gate.ANY, Apply(Vec2Mult(matrix)))
    return MutationFn(IdSet(ids), Gate.ANY, Apply(NestedForEach(inner)))


def translate_object(replica: ForEachList, p: Position, v: Vec2):
    """Append translation ``v`` to object ``p``'s list; returns the envelope."""
    return replica.apply_at(p, InsertAt(v))


def clockwise(degrees: float, max_denominator: int = 10_000) -> Vec2Mult:
    """Rational approximation of a clockwise rotation."""
    rad = math.radians(degrees)
    c = Fraction(math.cos(rad)).limit_denominator(max_denominator)
    s = Fraction(math.sin(rad)).limit_denominator(max_denominator)
    return rotation(c, s)
