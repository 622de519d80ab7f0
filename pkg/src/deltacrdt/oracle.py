"""Ground truth for the delta machinery.

* Standard (full-state) mutators, written directly from the classic CRDT
  definitions rather than from the delta-mutators, so that the identity
  ``m(X) == X ⊔ mδ(X)`` is a real check and not a tautology.
* :class:`NaiveContext`, an uncompressed set-of-dots causal context.
* :class:`OracleNode`, the classic anti-entropy that ships whole states.
"""

from __future__ import annotations

import random
from typing import Any, Callable, Hashable, Iterable

from .causal import EMPTY_DOTMAP, Causal, Dot, DotFun, DotMap, DotSet
from .causal_types import AWSet, EWFlag, MVRegister, ORMap, RWSet
from .lattice import Lattice, LexPair, MaxInt, OrBool, ReplicaId
from .primitives import AWLWWSet, GCounter, GSet, LexCounter, PNCounter, TwoPSet
from .protocol import BasicPayload, DurableStore, MemoryStore, NodeDown

FullMutator = Callable[[Any], Any]


def derived(delta_mutator: Callable[[Any], Any]) -> FullMutator:
    """Full mutator obtained from a delta-mutator: ``X ↦ X ⊔ mδ(X)``."""

    def m(x):
        return x.join(delta_mutator(x))

    return m


def check_decomposition(full: FullMutator, delta_mutator: Callable[[Any], Any], state: Lattice) -> bool:
    """``full(X) == X ⊔ mδ(X)``, and both are inflations of ``X``."""
    expected = full(state)
    via_delta = state.join(delta_mutator(state))
    return expected == via_delta and state.leq(expected)


# -- counters -----------------------------------------------------------------


def gcounter_inc(m: GCounter, i: ReplicaId) -> GCounter:
    entries = dict(m.entries)
    entries[i] = entries.get(i, 0) + 1
    return GCounter(entries)


def pncounter_inc(x: PNCounter, i: ReplicaId) -> PNCounter:
    return PNCounter(gcounter_inc(x.pos, i), x.neg)


def pncounter_dec(x: PNCounter, i: ReplicaId) -> PNCounter:
    return PNCounter(x.pos, gcounter_inc(x.neg, i))


def _lex_add(x: LexCounter, i: ReplicaId, de: int, dc: int) -> LexCounter:
    epoch, count = x.get(i)
    entries = dict(x.entries)
    entries[i] = LexPair(MaxInt(epoch + de), MaxInt(count + dc))
    return LexCounter(entries)


def lexcounter_inc(x: LexCounter, i: ReplicaId) -> LexCounter:
    return _lex_add(x, i, 0, 1)


def lexcounter_dec(x: LexCounter, i: ReplicaId) -> LexCounter:
    return _lex_add(x, i, 1, -1)


# -- simple sets ----------------------------------------------------------------


def gset_insert(s: GSet, i: ReplicaId, e: Hashable) -> GSet:
    return GSet(s.items | {e})


def twopset_insert(s: TwoPSet, i: ReplicaId, e: Hashable) -> TwoPSet:
    return TwoPSet(s.added | {e}, s.removed)


def twopset_remove(s: TwoPSet, i: ReplicaId, e: Hashable) -> TwoPSet:
    return TwoPSet(s.added, s.removed | {e})


def _lww_set(s: AWLWWSet, e: Hashable, t: int, present: bool) -> AWLWWSet:
    cur = s.entries.get(e)
    if cur is None:
        if t == 0 and not present:
            return s
    else:
        ct, cp = cur.first.value, cur.second.value
        if t < ct or (t == ct and (cp or not present)):
            return s
    entries = dict(s.entries)
    entries[e] = LexPair(MaxInt(t), OrBool(present))
    return AWLWWSet(entries)


def awlww_insert(s: AWLWWSet, i: ReplicaId, e: Hashable, t: int) -> AWLWWSet:
    return _lww_set(s, e, t, True)


def awlww_remove(s: AWLWWSet, i: ReplicaId, e: Hashable, t: int) -> AWLWWSet:
    return _lww_set(s, e, t, False)


# -- causal types -------------------------------------------------------------


def ewflag_enable(x: EWFlag, i: ReplicaId) -> EWFlag:
    d = x.ctx.next(i)
    return EWFlag(DotSet(frozenset((d,))), x.ctx.insert(d))


def ewflag_disable(x: EWFlag, i: ReplicaId) -> EWFlag:
    return EWFlag(DotSet(), x.ctx)


def mvreg_write(x: MVRegister, i: ReplicaId, v: Any) -> MVRegister:
    d = x.ctx.next(i)
    return MVRegister(DotFun({d: v}), x.ctx.insert(d))


def mvreg_clear(x: MVRegister, i: ReplicaId) -> MVRegister:
    return MVRegister(DotFun(), x.ctx)


def _without(store: DotMap, k: Hashable) -> DotMap:
    if k not in store.entries:
        return store
    return DotMap({key: v for key, v in store.entries.items() if key != k})


def _with(store: DotMap, k: Hashable, v) -> DotMap:
    entries = dict(store.entries)
    entries[k] = v
    return DotMap(entries)


def awset_add(x: AWSet, i: ReplicaId, e: Hashable) -> AWSet:
    d = x.ctx.next(i)
    return AWSet(_with(x.store, e, DotSet(frozenset((d,)))), x.ctx.insert(d))


def awset_remove(x: AWSet, i: ReplicaId, e: Hashable) -> AWSet:
    return AWSet(_without(x.store, e), x.ctx)


def awset_clear(x: AWSet, i: ReplicaId) -> AWSet:
    return AWSet(EMPTY_DOTMAP, x.ctx)


def _rwset_tag(x: RWSet, i: ReplicaId, e: Hashable, flag: bool) -> RWSet:
    d = x.ctx.next(i)
    nested = DotMap({flag: DotSet(frozenset((d,)))})
    return RWSet(_with(x.store, e, nested), x.ctx.insert(d))


def rwset_add(x: RWSet, i: ReplicaId, e: Hashable) -> RWSet:
    return _rwset_tag(x, i, e, True)


def rwset_remove(x: RWSet, i: ReplicaId, e: Hashable) -> RWSet:
    return _rwset_tag(x, i, e, False)


def rwset_clear(x: RWSet, i: ReplicaId) -> RWSet:
    return RWSet(EMPTY_DOTMAP, x.ctx)


def ormap_apply(x: ORMap, i: ReplicaId, k: Hashable, full_op: Callable[[Causal], Causal]) -> ORMap:
    """Run a full-state mutator of the embedded type on the value at ``k``."""
    v = full_op(x.get(k))
    store = _without(x.store, k) if v.store.is_bottom() else _with(x.store, k, v.store)
    return ORMap(store, v.ctx, x.proto)


def ormap_remove(x: ORMap, i: ReplicaId, k: Hashable) -> ORMap:
    return ORMap(_without(x.store, k), x.ctx, x.proto)


def ormap_clear(x: ORMap, i: ReplicaId) -> ORMap:
    return ORMap(EMPTY_DOTMAP, x.ctx, x.proto)


# -- naive causal context -----------------------------------------------------


class NaiveContext:
    """Uncompressed causal context: a plain set of dots."""

    def __init__(self, dots: Iterable[tuple] = ()):
        self.dots = {Dot(r, n) for r, n in dots}

    def max(self, i: ReplicaId) -> int:
        return max([n for r, n in self.dots if r == i] + [0])

    def next(self, i: ReplicaId) -> Dot:
        return Dot(i, self.max(i) + 1)

    def contains(self, d: tuple) -> bool:
        return Dot(*d) in self.dots

    def insert(self, d: tuple) -> NaiveContext:
        return NaiveContext(self.dots | {Dot(*d)})

    def union(self, other: NaiveContext) -> NaiveContext:
        return NaiveContext(self.dots | other.dots)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NaiveContext):
            return NotImplemented
        return self.dots == other.dots

    def __repr__(self) -> str:
        return f"NaiveContext({sorted(self.dots)!r})"


# -- full-state anti-entropy ----------------------------------------------------


class OracleNode:
    """Classic state-based anti-entropy: ship the whole state to a neighbour."""

    def __init__(
        self,
        node_id: ReplicaId,
        neighbors: Iterable[ReplicaId],
        bottom: Lattice,
        *,
        store: DurableStore | None = None,
    ) -> None:
        self.id = node_id
        self.neighbors = tuple(sorted(set(neighbors) - {node_id}))
        self.store: DurableStore = store if store is not None else MemoryStore()
        self._bottom = bottom.bottom()
        self.up = True
        loaded = self.store.load()
        self.state: Lattice = loaded[0] if loaded is not None else self._bottom

    def _check_up(self) -> None:
        if not self.up:
            raise NodeDown(self.id)

    def on_operation(self, mutator: FullMutator) -> None:
        self._check_up()
        self.state = mutator(self.state)
        self.store.save(self.state, 0)

    def on_receive(self, payload: Lattice) -> None:
        self._check_up()
        new = self.state.join(payload)
        if new is not self.state:
            self.state = new
            self.store.save(new, 0)

    def periodic(self, rng: random.Random) -> list[BasicPayload]:
        self._check_up()
        if not self.neighbors:
            return []
        j = rng.choice(self.neighbors)
        return [BasicPayload(self.id, j, self.state, True)]

    def ship_state(self) -> list[BasicPayload]:
        self._check_up()
        return [BasicPayload(self.id, j, self.state, True) for j in self.neighbors]

    def crash(self) -> None:
        self.up = False
        self.state = None  # type: ignore[assignment]

    def recover(self) -> None:
        loaded = self.store.load()
        self.state = loaded[0] if loaded is not None else self._bottom
        self.up = True

    def check_invariants(self) -> None:
        """Nothing is buffered outside the state, so there is nothing to check."""
