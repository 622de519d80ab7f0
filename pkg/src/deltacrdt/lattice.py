"""Join-semilattice kernel.

Every state and every delta in this package is a :class:`Lattice` value:
an immutable object with a ``join`` (least upper bound), a ``bottom`` of its
own concrete type, and the partial order derived from join. Datatypes only
ever change state through :func:`mutate`, which joins a delta-mutation into
the current state.

Map-shaped values never store entries equal to the bottom of their value
type; an absent key reads as bottom. Equality is plain structural equality
on that canonical form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Hashable, TypeVar

ReplicaId = Hashable
"""Opaque replica identifier. Strings in practice; must be totally ordered."""

L = TypeVar("L", bound="Lattice")
DeltaMutator = Callable[[Any], Any]


class Lattice:
    """Base class for join-semilattice values."""

    __slots__ = ()

    def join(self: L, other: L) -> L:
        raise NotImplementedError

    def bottom(self: L) -> L:
        """Bottom element of this value's concrete type."""
        raise NotImplementedError

    def is_bottom(self) -> bool:
        return self == self.bottom()

    def leq(self, other: Lattice) -> bool:
        """Derived order: ``self <= other`` iff ``self.join(other) == other``."""
        # joins hand back their receiver when nothing changes, which skips the deep compare
        j = other.join(self)
        return j is other or j == other


def join(a: L, b: L) -> L:
    return a.join(b)


def leq(a: Lattice, b: Lattice) -> bool:
    return a.leq(b)


def derived_leq(a: Lattice, b: Lattice) -> bool:
    """The join-and-compare order, bypassing any faster override."""
    return a.join(b) == b


def join_all(values, bottom: L) -> L:
    out = bottom
    for v in values:
        out = out.join(v)
    return out


def mutate(state: L, mutator: DeltaMutator) -> tuple[L, L]:
    """Apply a delta-mutator; return ``(state ⊔ delta, delta)``."""
    delta = mutator(state)
    return state.join(delta), delta


# -- scalar lattices --------------------------------------------------------


@dataclass(frozen=True, slots=True)
class MaxInt(Lattice):
    """Integers under ``max``; bottom is 0 (naturals, or the reachable part of Z)."""

    value: int = 0

    def join(self, other: MaxInt) -> MaxInt:
        return self if self.value >= other.value else other

    def bottom(self) -> MaxInt:
        return _MAX_BOTTOM

    def is_bottom(self) -> bool:
        return self.value == 0

    def leq(self, other: MaxInt) -> bool:
        return self.value <= other.value


@dataclass(frozen=True, slots=True)
class OrBool(Lattice):
    """Booleans ordered ``False < True``."""

    value: bool = False

    def join(self, other: OrBool) -> OrBool:
        return self if self.value or not other.value else other

    def bottom(self) -> OrBool:
        return _FALSE

    def is_bottom(self) -> bool:
        return not self.value

    def leq(self, other: OrBool) -> bool:
        return other.value or not self.value


_MAX_BOTTOM = MaxInt(0)
_FALSE = OrBool(False)


# -- compositions -----------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Pair(Lattice):
    """Product lattice; join is coordinate-wise."""

    first: Any
    second: Any

    def join(self, other: Pair) -> Pair:
        a = self.first.join(other.first)
        b = self.second.join(other.second)
        if a is self.first and b is self.second:
            return self
        return Pair(a, b)

    def bottom(self) -> Pair:
        return Pair(self.first.bottom(), self.second.bottom())

    def is_bottom(self) -> bool:
        return self.first.is_bottom() and self.second.is_bottom()

    def leq(self, other: Pair) -> bool:
        return self.first.leq(other.first) and self.second.leq(other.second)


@dataclass(frozen=True, slots=True)
class LexPair(Lattice):
    """Lexicographic pair: the first component decides, the second breaks ties.

    Only a partial order is needed on ``first``. When the firsts are
    incomparable the join is ``(first ⊔ first', ⊥)``; with a totally ordered
    first component (timestamps, counters) that branch never runs.
    """

    first: Any
    second: Any

    def join(self, other: LexPair) -> LexPair:
        a, b = self.first, other.first
        if a == b:
            second = self.second.join(other.second)
            return self if second is self.second else LexPair(a, second)
        top = a.join(b)
        if top == a:
            return self
        if top == b:
            return other
        return LexPair(top, self.second.bottom())

    def bottom(self) -> LexPair:
        return LexPair(self.first.bottom(), self.second.bottom())

    def is_bottom(self) -> bool:
        return self.first.is_bottom() and self.second.is_bottom()

    def leq(self, other: LexPair) -> bool:
        a, b = self.first, other.first
        if a == b:
            return self.second.leq(other.second)
        return a.leq(b)
