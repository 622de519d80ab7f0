"""Causal delta-CRDTs: flags, registers, sets and the observed-remove map."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Hashable

from .causal import (
    EMPTY_CONTEXT,
    EMPTY_DOTFUN,
    EMPTY_DOTMAP,
    EMPTY_DOTSET,
    Causal,
    CausalContext,
    Dot,
    DotFun,
    DotMap,
    DotSet,
)
from .lattice import ReplicaId


def _ctx(dots) -> CausalContext:
    return CausalContext.from_dots(dots) if dots else EMPTY_CONTEXT


@dataclass(frozen=True, slots=True)
class EWFlag(Causal):
    """Enable-wins flag over a dot set."""

    store: DotSet = EMPTY_DOTSET
    ctx: CausalContext = EMPTY_CONTEXT

    def enable_delta(self, i: ReplicaId) -> EWFlag:
        d = self.ctx.next(i)
        return EWFlag(DotSet(frozenset((d,))), _ctx(self.store.items | {d}))

    def disable_delta(self, i: ReplicaId) -> EWFlag:
        return EWFlag(EMPTY_DOTSET, _ctx(self.store.items))

    def read(self) -> bool:
        return bool(self.store.items)


@dataclass(frozen=True, slots=True)
class MVRegister(Causal):
    """Multi-value register: each written value is tagged by one dot."""

    store: DotFun = EMPTY_DOTFUN
    ctx: CausalContext = EMPTY_CONTEXT

    def write_delta(self, i: ReplicaId, v: Any) -> MVRegister:
        d = self.ctx.next(i)
        seen = set(self.store.entries)
        seen.add(d)
        return MVRegister(DotFun({d: v}), _ctx(seen))

    def clear_delta(self, i: ReplicaId) -> MVRegister:
        return MVRegister(EMPTY_DOTFUN, _ctx(self.store.entries))

    def read(self) -> frozenset:
        return frozenset(self.store.entries.values())


@dataclass(frozen=True, slots=True)
class AWSet(Causal):
    """Add-wins set: ``DotMap[element, DotSet]`` with one shared context."""

    store: DotMap = EMPTY_DOTMAP
    ctx: CausalContext = EMPTY_CONTEXT

    def add_delta(self, i: ReplicaId, e: Hashable) -> AWSet:
        d = self.ctx.next(i)
        old = self.store.entries.get(e, EMPTY_DOTSET).items
        return AWSet(DotMap({e: DotSet(frozenset((d,)))}), _ctx(old | {d}))

    def remove_delta(self, i: ReplicaId, e: Hashable) -> AWSet:
        return AWSet(EMPTY_DOTMAP, _ctx(self.store.entries.get(e, EMPTY_DOTSET).items))

    def clear_delta(self, i: ReplicaId) -> AWSet:
        return AWSet(EMPTY_DOTMAP, _ctx(self.store.dots()))

    def elements(self) -> frozenset:
        return frozenset(self.store.entries)


@dataclass(frozen=True, slots=True)
class RWSet(Causal):
    """Remove-wins set: ``DotMap[element, DotMap[bool, DotSet]]``.

    An element is present when its nested map has no ``False`` entry, so a
    remove concurrent with an add hides the element.
    """

    store: DotMap = EMPTY_DOTMAP
    ctx: CausalContext = EMPTY_CONTEXT

    def _tag(self, i: ReplicaId, e: Hashable, flag: bool) -> RWSet:
        d = self.ctx.next(i)
        old = self.store.entries.get(e)
        seen = set(old.dots()) if old is not None else set()
        seen.add(d)
        return RWSet(DotMap({e: DotMap({flag: DotSet(frozenset((d,)))})}), _ctx(seen))

    def add_delta(self, i: ReplicaId, e: Hashable) -> RWSet:
        return self._tag(i, e, True)

    def remove_delta(self, i: ReplicaId, e: Hashable) -> RWSet:
        return self._tag(i, e, False)

    def clear_delta(self, i: ReplicaId) -> RWSet:
        return RWSet(EMPTY_DOTMAP, _ctx(self.store.dots()))

    def elements(self) -> frozenset:
        return frozenset(e for e, nested in self.store.entries.items() if False not in nested.entries)


@dataclass(frozen=True, slots=True)
class ORMap(Causal):
    """Observed-remove map embedding a causal CRDT under each key.

    All keys share the map's context, which is never reset, so re-creating a
    removed key cannot resurrect old state. ``proto`` is the bottom of the
    embedded type; it fixes the value type for the whole map (including
    nested maps, via the proto's own proto).
    """

    store: DotMap = EMPTY_DOTMAP
    ctx: CausalContext = EMPTY_CONTEXT
    proto: Causal = field(default=None, compare=False)  # type: ignore[assignment]

    def __post_init__(self):
        if not isinstance(self.proto, Causal):
            raise TypeError(f"ORMap values must be causal CRDTs, got {self.proto!r}")

    @classmethod
    def of(cls, proto: Causal) -> ORMap:
        return cls(EMPTY_DOTMAP, EMPTY_CONTEXT, proto.bottom())

    def with_parts(self, store, ctx) -> ORMap:
        return ORMap(store, ctx, self.proto)

    def get(self, k: Hashable) -> Causal:
        """Embedded value at ``k``, paired with the map-wide context."""
        proto = self.proto
        return proto.with_parts(self.store.entries.get(k, proto.store.empty()), self.ctx)

    def keys(self) -> frozenset:
        return frozenset(self.store.entries)

    def apply_delta(self, i: ReplicaId, k: Hashable, op: Callable[[Causal], Causal]) -> ORMap:
        """Run the embedded delta-mutator ``op`` on the value at ``k``."""
        delta = op(self.get(k))
        store = EMPTY_DOTMAP if delta.store.is_bottom() else DotMap({k: delta.store})
        return ORMap(store, delta.ctx, self.proto)

    def remove_delta(self, i: ReplicaId, k: Hashable) -> ORMap:
        old = self.store.entries.get(k)
        return ORMap(EMPTY_DOTMAP, _ctx(old.dots()) if old is not None else EMPTY_CONTEXT, self.proto)

    def clear_delta(self, i: ReplicaId) -> ORMap:
        return ORMap(EMPTY_DOTMAP, _ctx(self.store.dots()), self.proto)


__all__ = ["AWSet", "Dot", "EWFlag", "MVRegister", "ORMap", "RWSet"]
