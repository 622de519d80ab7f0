"""Non-causal delta-CRDTs: counters and simple sets.

Delta-mutators are methods named ``*_delta`` that return a value of the same
type; they never modify ``self``. Apply them with
:func:`deltacrdt.lattice.mutate` or by joining the result yourself.

>>> from deltacrdt.primitives import GCounter
>>> x = GCounter()
>>> x = x.join(x.inc_delta("a"))
>>> x.join(x.inc_delta("a")).value()
2
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Hashable

from . import kernels
from .lattice import Lattice, LexPair, MaxInt, OrBool, ReplicaId


@dataclass(frozen=True, slots=True)
class GCounter(Lattice):
    """Grow-only counter: one increment tally per replica, joined by max."""

    entries: dict = field(default_factory=dict)

    def join(self, other: GCounter) -> GCounter:
        merged = kernels.max_merge(self.entries, other.entries)
        if merged is self.entries:
            return self
        if merged is other.entries:
            return other
        return GCounter(merged)

    def bottom(self) -> GCounter:
        return GCounter()

    def is_bottom(self) -> bool:
        return not self.entries

    def leq(self, other: GCounter) -> bool:
        o = other.entries
        return all(v <= o.get(k, 0) for k, v in self.entries.items())

    def get(self, i: ReplicaId) -> int:
        return self.entries.get(i, 0)

    def inc_delta(self, i: ReplicaId) -> GCounter:
        return GCounter({i: self.entries.get(i, 0) + 1})

    def value(self) -> int:
        return sum(self.entries.values())


@dataclass(frozen=True, slots=True)
class PNCounter(Lattice):
    pos: GCounter = field(default_factory=GCounter)
    neg: GCounter = field(default_factory=GCounter)

    def join(self, other: PNCounter) -> PNCounter:
        p = self.pos.join(other.pos)
        n = self.neg.join(other.neg)
        if p is self.pos and n is self.neg:
            return self
        return PNCounter(p, n)

    def bottom(self) -> PNCounter:
        return PNCounter()

    def is_bottom(self) -> bool:
        return not self.pos.entries and not self.neg.entries

    def leq(self, other: PNCounter) -> bool:
        return self.pos.leq(other.pos) and self.neg.leq(other.neg)

    def inc_delta(self, i: ReplicaId) -> PNCounter:
        return PNCounter(self.pos.inc_delta(i), GCounter())

    def dec_delta(self, i: ReplicaId) -> PNCounter:
        return PNCounter(GCounter(), self.neg.inc_delta(i))

    def value(self) -> int:
        return self.pos.value() - self.neg.value()


_ZERO_LEX = LexPair(MaxInt(0), MaxInt(0))


@dataclass(frozen=True, slots=True)
class LexCounter(Lattice):
    """Per-replica ``(epoch, count)`` lexicographic pairs.

    A decrement bumps the epoch so that the lowered count wins the join.
    The ``+`` used by the mutators is componentwise integer addition on the
    pair, not the lattice join.
    """

    entries: dict = field(default_factory=dict)

    def join(self, other: LexCounter) -> LexCounter:
        a, b = self.entries, other.entries
        if not b:
            return self
        if not a:
            return other
        out = dict(a)
        for k, v in b.items():
            cur = out.get(k)
            out[k] = v if cur is None else cur.join(v)
        return LexCounter(out)

    def bottom(self) -> LexCounter:
        return LexCounter()

    def is_bottom(self) -> bool:
        return not self.entries

    def get(self, i: ReplicaId) -> tuple[int, int]:
        p = self.entries.get(i, _ZERO_LEX)
        return p.first.value, p.second.value

    def _bump(self, i: ReplicaId, d_epoch: int, d_count: int) -> LexCounter:
        epoch, count = self.get(i)
        return LexCounter({i: LexPair(MaxInt(epoch + d_epoch), MaxInt(count + d_count))})

    def inc_delta(self, i: ReplicaId) -> LexCounter:
        return self._bump(i, 0, 1)

    def dec_delta(self, i: ReplicaId) -> LexCounter:
        return self._bump(i, 1, -1)

    def value(self) -> int:
        return sum(p.second.value for p in self.entries.values())


@dataclass(frozen=True, slots=True)
class GSet(Lattice):
    items: frozenset = frozenset()

    def join(self, other: GSet) -> GSet:
        a, b = self.items, other.items
        if b <= a:
            return self
        if a <= b:
            return other
        return GSet(a | b)

    def bottom(self) -> GSet:
        return GSet()

    def is_bottom(self) -> bool:
        return not self.items

    def leq(self, other: GSet) -> bool:
        return self.items <= other.items

    def insert_delta(self, i: ReplicaId, e: Hashable) -> GSet:
        return GSet(frozenset((e,)))

    def elements(self) -> frozenset:
        return self.items


@dataclass(frozen=True, slots=True)
class TwoPSet(Lattice):
    """Two-phase set: a removed element stays removed forever."""

    added: frozenset = frozenset()
    removed: frozenset = frozenset()

    def join(self, other: TwoPSet) -> TwoPSet:
        a = self.added | other.added
        r = self.removed | other.removed
        if a == self.added and r == self.removed:
            return self
        return TwoPSet(a, r)

    def bottom(self) -> TwoPSet:
        return TwoPSet()

    def is_bottom(self) -> bool:
        return not self.added and not self.removed

    def leq(self, other: TwoPSet) -> bool:
        return self.added <= other.added and self.removed <= other.removed

    def insert_delta(self, i: ReplicaId, e: Hashable) -> TwoPSet:
        return TwoPSet(frozenset((e,)), frozenset())

    def remove_delta(self, i: ReplicaId, e: Hashable) -> TwoPSet:
        return TwoPSet(frozenset(), frozenset((e,)))

    def elements(self) -> frozenset:
        return self.added - self.removed


@dataclass(frozen=True, slots=True)
class AWLWWSet(Lattice):
    """Last-writer-wins set with caller-supplied timestamps; adds win ties.

    Entries map an element to ``LexPair(MaxInt(t), OrBool(present))``.
    Timestamps are taken as given. Keeping them monotonic is the caller's
    job (see :class:`MonotonicClock`).
    """

    entries: dict = field(default_factory=dict)

    def join(self, other: AWLWWSet) -> AWLWWSet:
        a, b = self.entries, other.entries
        if not b:
            return self
        if not a:
            return other
        out = dict(a)
        changed = False
        for e, v in b.items():
            cur = out.get(e)
            new = v if cur is None else cur.join(v)
            if new is not cur:
                out[e] = new
                changed = True
        return AWLWWSet(out) if changed else self

    def bottom(self) -> AWLWWSet:
        return AWLWWSet()

    def is_bottom(self) -> bool:
        return not self.entries

    def insert_delta(self, i: ReplicaId, e: Hashable, t: int) -> AWLWWSet:
        return AWLWWSet({e: LexPair(MaxInt(t), OrBool(True))})

    def remove_delta(self, i: ReplicaId, e: Hashable, t: int) -> AWLWWSet:
        if t == 0:
            # (0, False) is the entry's bottom; storing it would break canonicity
            return AWLWWSet()
        return AWLWWSet({e: LexPair(MaxInt(t), OrBool(False))})

    def elements(self) -> frozenset:
        return frozenset(e for e, p in self.entries.items() if p.second.value)


class MonotonicClock:
    """Per-process timestamp source that never goes backwards.

    ``observe`` lets a replica move its clock past timestamps it has seen.
    """

    def __init__(self, start: int = 0):
        self._last = start

    def now(self) -> int:
        self._last += 1
        return self._last

    def observe(self, t: int) -> None:
        if t > self._last:
            self._last = t


def awlww_timestamps(s: AWLWWSet) -> dict[Any, tuple[int, bool]]:
    return {e: (p.first.value, p.second.value) for e, p in s.entries.items()}
