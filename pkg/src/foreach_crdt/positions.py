"""Dense, unique list positions as sequences of (digit, author) pairs.

Positions compare lexicographically, pair by pair, and a proper prefix sorts
before its extensions. Every generated position ends with the pair
``(counter + 1, author)``, so two positions generated by distinct
``(author, counter)`` pairs can never be equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


class PositionError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Position:
    path: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if not self.path:
            raise PositionError("position path must be non-empty")
        for digit, author in self.path:
            if not isinstance(digit, int) or digit < 0:
                raise PositionError(f"bad digit {digit!r}")
            if not author or "/" in author:
                raise PositionError(f"bad author {author!r}")

    @classmethod
    def of(cls, *pairs: tuple[int, str]) -> Position:
        return cls(tuple((int(d), a) for d, a in pairs))

    def __str__(self) -> str:
        return "/".join(f"{digit}.{author}" for digit, author in self.path)

    def __repr__(self) -> str:
        return f"Position({self})"

    @classmethod
    def parse(cls, text: str) -> Position:
        pairs = []
        for chunk in text.split("/"):
            digit, sep, author = chunk.partition(".")
            if not sep or not digit.isdigit():
                raise PositionError(f"malformed position {text!r}")
            pairs.append((int(digit), author))
        return cls(tuple(pairs))


class _Infinity:
    __slots__ = ("sign",)

    def __init__(self, sign: int):
        self.sign = sign

    def __repr__(self) -> str:
        return "POS_INF" if self.sign > 0 else "NEG_INF"

    def __str__(self) -> str:
        return "+inf" if self.sign > 0 else "-inf"

    def __reduce__(self):
        return (_infinity, (self.sign,))


def _infinity(sign):
    return POS_INF if sign > 0 else NEG_INF


NEG_INF = _Infinity(-1)
POS_INF = _Infinity(1)

PositionBound = Union[Position, _Infinity]


def parse_bound(text: str) -> PositionBound:
    if text == "-inf":
        return NEG_INF
    if text == "+inf":
        return POS_INF
    return Position.parse(text)


def bound_lt(a: PositionBound, b: PositionBound) -> bool:
    """Strict order on bounds: NEG_INF < every position < POS_INF."""
    if isinstance(a, _Infinity):
        return a is NEG_INF and b is not NEG_INF
    if isinstance(b, _Infinity):
        return b is POS_INF
    return a < b


def compare(a: Position, b: Position) -> int:
    """-1, 0 or 1."""
    return (a > b) - (a < b)


def between(left: PositionBound, right: PositionBound, author: str, counter: int) -> Position:
    """A fresh position strictly between ``left`` and ``right``.

    Walks down the bounds' paths looking for a level with a free digit (the
    smallest one is taken), then appends the disambiguating pair
    ``(counter + 1, author)``.
    """
    if not bound_lt(left, right):
        raise PositionError(f"between() needs left < right, got {left} and {right}")
    if counter < 0:
        raise PositionError("counter must be non-negative")
    return Position(_stem(left, right, author) + ((counter + 1, author),))


def _stem(left: PositionBound, right: PositionBound, author: str) -> tuple[tuple[int, str], ...]:
    # Returns s with left <= s < right and s not a prefix of right, so that
    # every one-pair extension of s lies strictly inside the bounds.
    lpath = left.path if isinstance(left, Position) else None
    rpath = right.path if isinstance(right, Position) else None
    stem: list[tuple[int, str]] = []
    i = 0
    while True:
        tight_l = lpath is not None and i < len(lpath) and tuple(stem) == lpath[:i]
        tight_r = rpath is not None and tuple(stem) == rpath[:i]
        if not tight_l and not tight_r:
            return tuple(stem)
        if tight_r and i >= len(rpath):
            # stem == right: only possible when right ends with a 0 digit,
            # which between() never produces.
            raise PositionError(f"no position fits below {right}")
        lo = lpath[i][0] if tight_l else -1
        if not tight_r:
            return tuple(stem) + ((lo + 1, author),)
        hi = rpath[i][0]
        if hi - lo > 1:
            return tuple(stem) + ((lo + 1, author),)
        stem.append(lpath[i] if tight_l else rpath[i])
        i += 1
