"""Causal CRDT machinery: dots, causal contexts, dot stores, ``Causal`` join.

A causal state is a dot store paired with a causal context. A dot that is in
the context but not in the store was removed at some point; joining drops it
from the other side's store as well. Contexts are kept compressed as a
version vector plus a cloud of non-contiguous dots, and every operation is
defined on the set of dots they denote.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Iterator, NamedTuple

from . import kernels
from .lattice import Lattice, ReplicaId


class Dot(NamedTuple):
    """``(replica, counter)`` naming one update event; counters start at 1."""

    replica: Any
    counter: int


@dataclass(frozen=True, slots=True)
class CausalContext(Lattice):
    """Set of dots, stored as ``vector`` (contiguous prefixes) + ``cloud``.

    Instances are always compact: no cloud dot is covered by, or directly
    extends, the vector. That makes the representation canonical, so
    structural equality is equality of the denoted dot sets.
    """

    vector: dict = field(default_factory=dict)
    cloud: frozenset = frozenset()

    @classmethod
    def from_dots(cls, dots: Iterable[tuple]) -> CausalContext:
        vec, cloud = kernels.compact({}, frozenset(dots))
        return cls(vec, cloud)

    @classmethod
    def make(cls, vector: dict, cloud: Iterable[tuple] = ()) -> CausalContext:
        """Build from an arbitrary vector and cloud, compacting as needed."""
        vec = {r: n for r, n in vector.items() if n > 0}
        vec, cl = kernels.compact(vec, frozenset(cloud))
        return cls(vec, cl)

    def max(self, i: ReplicaId) -> int:
        top = self.vector.get(i, 0)
        for r, n in self.cloud:
            if r == i and n > top:
                top = n
        return top

    def next(self, i: ReplicaId) -> Dot:
        return Dot(i, self.max(i) + 1)

    def contains(self, d: tuple) -> bool:
        return kernels.ctx_contains(self.vector, self.cloud, d)

    __contains__ = contains

    def insert(self, d: tuple) -> CausalContext:
        if self.contains(d):
            return self
        vec, cloud = kernels.compact(self.vector, self.cloud | {d})
        return CausalContext(vec, cloud)

    def union(self, other: CausalContext) -> CausalContext:
        vec, cloud = kernels.ctx_union(self.vector, self.cloud, other.vector, other.cloud)
        if vec is self.vector and cloud is self.cloud:
            return self
        return CausalContext(vec, cloud)

    def compact(self) -> CausalContext:
        vec, cloud = kernels.compact(self.vector, self.cloud)
        if vec is self.vector and cloud is self.cloud:
            return self
        return CausalContext(vec, cloud)

    def dots(self) -> Iterator[Dot]:
        """Enumerate the denoted dot set."""
        for r, top in self.vector.items():
            for n in range(1, top + 1):
                yield Dot(r, n)
        yield from self.cloud

    def is_contiguous(self) -> bool:
        return not self.cloud

    def join(self, other: CausalContext) -> CausalContext:
        return self.union(other)

    def bottom(self) -> CausalContext:
        return EMPTY_CONTEXT

    def is_bottom(self) -> bool:
        return not self.vector and not self.cloud

    def leq(self, other: CausalContext) -> bool:
        ov, oc = other.vector, other.cloud
        for r, n in self.vector.items():
            top = ov.get(r, 0)
            if n > top and any((r, k) not in oc for k in range(top + 1, n + 1)):
                return False
        return all(kernels.ctx_contains(ov, oc, d) for d in self.cloud)

    def __len__(self) -> int:
        return sum(self.vector.values()) + len(self.cloud)


EMPTY_CONTEXT = CausalContext()


# -- dot stores ---------------------------------------------------------------


class DotStore:
    """A container of live dots plus datatype payload."""

    __slots__ = ()

    def dots(self) -> frozenset:
        raise NotImplementedError

    def empty(self) -> DotStore:
        """The bottom store of the same kind."""
        raise NotImplementedError

    def is_bottom(self) -> bool:
        raise NotImplementedError

    def join_with(self, ctx: CausalContext, other: DotStore, other_ctx: CausalContext) -> DotStore:
        """Store component of ``(self, ctx) ⊔ (other, other_ctx)``."""
        raise NotImplementedError


@dataclass(frozen=True, slots=True)
class DotSet(DotStore):
    items: frozenset = frozenset()

    def dots(self) -> frozenset:
        return self.items

    def empty(self) -> DotSet:
        return EMPTY_DOTSET

    def is_bottom(self) -> bool:
        return not self.items

    def join_with(self, ctx, other, other_ctx):
        out = kernels.dotset_join(
            self.items, ctx.vector, ctx.cloud, other.items, other_ctx.vector, other_ctx.cloud
        )
        if out == self.items:
            return self
        if out == other.items:
            return other
        return DotSet(out)


EMPTY_DOTSET = DotSet()


def _value_join(x, y):
    if isinstance(x, Lattice):
        return x.join(y)
    if x != y:
        raise ValueError(f"conflicting payloads for one dot: {x!r} vs {y!r}")
    return x


@dataclass(frozen=True, slots=True)
class DotFun(DotStore):
    """Map from dots to values.

    Values that are :class:`Lattice` instances are joined on common dots.
    Plain payloads are treated as constants: the same dot must always carry
    the same payload, and a mismatch raises ``ValueError``.
    """

    entries: dict = field(default_factory=dict)

    def dots(self) -> frozenset:
        return frozenset(self.entries)

    def empty(self) -> DotFun:
        return EMPTY_DOTFUN

    def is_bottom(self) -> bool:
        return not self.entries

    def join_with(self, ctx, other, other_ctx):
        out = kernels.dotfun_join(
            self.entries, ctx.vector, ctx.cloud,
            other.entries, other_ctx.vector, other_ctx.cloud, _value_join,
        )
        if out == self.entries:
            return self
        return DotFun(out)


EMPTY_DOTFUN = DotFun()


@dataclass(frozen=True, slots=True)
class DotMap(DotStore):
    """Map from keys to nested dot stores; bottom-valued keys are absent."""

    entries: dict = field(default_factory=dict)

    def dots(self) -> frozenset:
        out: set = set()
        for v in self.entries.values():
            out.update(v.dots())
        return frozenset(out)

    def empty(self) -> DotMap:
        return EMPTY_DOTMAP

    def is_bottom(self) -> bool:
        return not self.entries

    def get(self, k: Hashable, default: DotStore | None = None) -> DotStore | None:
        return self.entries.get(k, default)

    def join_with(self, ctx, other, other_ctx):
        a, b = self.entries, other.entries
        out = {}
        changed = False
        for k, v in a.items():
            w = b.get(k)
            j = v.join_with(ctx, v.empty() if w is None else w, other_ctx)
            if j.is_bottom():
                changed = True
            else:
                out[k] = j
                changed = changed or j is not v
        for k, w in b.items():
            if k in a:
                continue
            j = w.empty().join_with(ctx, w, other_ctx)
            if not j.is_bottom():
                out[k] = j
                changed = True
        return DotMap(out) if changed else self


EMPTY_DOTMAP = DotMap()


def dots(store: DotStore) -> frozenset:
    return store.dots()


# -- the causal lattice -------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Causal(Lattice):
    """``(store, context)`` pair with the dot-store-specific join.

    Reachable states satisfy ``dots(store) ⊆ context``; joins are only
    meaningful between such states.
    """

    store: Any = EMPTY_DOTSET
    ctx: CausalContext = EMPTY_CONTEXT

    def with_parts(self, store: DotStore, ctx: CausalContext):
        """Same concrete type (and type parameters) with new parts."""
        return type(self)(store, ctx)

    def join(self, other):
        if other is self:
            return self
        store = self.store.join_with(self.ctx, other.store, other.ctx)
        ctx = self.ctx.union(other.ctx)
        if store is self.store and ctx is self.ctx:
            return self
        return self.with_parts(store, ctx)

    def bottom(self):
        return self.with_parts(self.store.empty(), EMPTY_CONTEXT)

    def is_bottom(self) -> bool:
        return self.store.is_bottom() and self.ctx.is_bottom()

    def dots(self) -> frozenset:
        return self.store.dots()

    def well_formed(self) -> bool:
        """``dots(store) ⊆ context``."""
        return all(self.ctx.contains(d) for d in self.store.dots())
