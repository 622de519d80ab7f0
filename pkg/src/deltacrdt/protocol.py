"""Anti-entropy engines as deterministic message-in/message-out state machines.

:class:`BasicNode` buffers a delta-group and periodically broadcasts either
that group or the full state; it guarantees convergence once every delta has
reached every replica. :class:`CausalNode` tags deltas with sequence numbers,
tracks per-neighbour acknowledgements and only ships delta-intervals that the
receiver can join without breaking causality, falling back to the full state
when the needed deltas are gone.

Engines hold no clocks and no sockets. The caller feeds them events and
delivers whatever messages they return.
"""

from __future__ import annotations

import os
import random
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Protocol

from . import codec
from .codec import _any, _Reader, _read_any, _u64, decode_scalar, encode_scalar
from .lattice import Lattice, ReplicaId

DeltaMutator = Callable[[Any], Any]


class NodeDown(RuntimeError):
    """An event was delivered to a crashed node."""


# -- messages -----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Delta:
    """A delta-interval ``Δ[start, seq)`` from ``src``; ``full`` marks the state fallback."""

    src: ReplicaId
    dst: ReplicaId
    payload: Any
    seq: int
    start: int = 0
    full: bool = False


@dataclass(frozen=True, slots=True)
class Ack:
    src: ReplicaId
    dst: ReplicaId
    seq: int


@dataclass(frozen=True, slots=True)
class BasicPayload:
    src: ReplicaId
    dst: ReplicaId
    payload: Any
    full: bool = False


Message = Delta | Ack | BasicPayload


def _flag(b: bool) -> bytes:
    return b"\x01" if b else b"\x00"


codec.register(
    Delta, 0x50,
    lambda m: b"\x50" + encode_scalar(m.src) + encode_scalar(m.dst) + _u64(m.seq)
    + _u64(m.start) + _flag(m.full) + _any(m.payload),
    lambda r: _read_delta(r),
)
codec.register(
    Ack, 0x51,
    lambda m: b"\x51" + encode_scalar(m.src) + encode_scalar(m.dst) + _u64(m.seq),
    lambda r: Ack(decode_scalar(r), decode_scalar(r), r.u64()),
)
codec.register(
    BasicPayload, 0x52,
    lambda m: b"\x52" + encode_scalar(m.src) + encode_scalar(m.dst) + _flag(m.full) + _any(m.payload),
    lambda r: BasicPayload(decode_scalar(r), decode_scalar(r), full=r.boolean(), payload=_read_any(r)),
)


def _read_delta(r: _Reader) -> Delta:
    src, dst = decode_scalar(r), decode_scalar(r)
    seq, start, full = r.u64(), r.u64(), r.boolean()
    return Delta(src, dst, _read_any(r), seq, start, full)


# -- ship policies -----------------------------------------------------------


class ShipPolicy:
    """Decides what a basic node broadcasts: its delta-group or its state."""

    def choose(self, state: Lattice, group: Lattice) -> tuple[Lattice, bool]:
        """Return ``(payload, is_full_state)``."""
        raise NotImplementedError


class AlwaysDelta(ShipPolicy):
    def choose(self, state, group):
        return group, False

    def __repr__(self) -> str:
        return "AlwaysDelta()"


class AlwaysState(ShipPolicy):
    def choose(self, state, group):
        return state, True

    def __repr__(self) -> str:
        return "AlwaysState()"


@dataclass(frozen=True)
class SizeThreshold(ShipPolicy):
    """Ship the state when ``|encode(group)| > ratio * |encode(state)|``."""

    ratio: float = 1.0

    def choose(self, state, group):
        if group.is_bottom():
            return group, False
        if codec.encoded_size(group) > self.ratio * codec.encoded_size(state):
            return state, True
        return group, False


# -- durable storage ----------------------------------------------------------


class DurableStore(Protocol):
    def load(self) -> tuple[Any, int] | None: ...

    def save(self, state: Any, counter: int) -> None: ...


class MemoryStore:
    """In-memory durable store; survives ``crash()`` of the node that owns it."""

    def __init__(self) -> None:
        self._record: tuple[Any, int] | None = None
        self.writes = 0

    def load(self) -> tuple[Any, int] | None:
        return self._record

    def save(self, state: Any, counter: int) -> None:
        self._record = (state, counter)
        self.writes += 1


class FileStore:
    """Snapshot file written to a temporary name, fsynced, then renamed."""

    def __init__(self, path: str | os.PathLike) -> None:
        self.path = Path(path)

    def load(self) -> tuple[Any, int] | None:
        try:
            data = self.path.read_bytes()
        except FileNotFoundError:
            return None
        return codec.read_snapshot(data)

    def save(self, state: Any, counter: int) -> None:
        data = codec.snapshot_bytes(state, counter)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=self.path.name + ".", dir=self.path.parent)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


# -- basic engine -------------------------------------------------------------


class BasicNode:
    """Convergence-only anti-entropy.

    Durable: the state. Volatile: the buffered delta-group. In transitive
    mode received payloads are also buffered and forwarded later; in direct
    mode only local deltas are.
    """

    def __init__(
        self,
        node_id: ReplicaId,
        neighbors: Iterable[ReplicaId],
        bottom: Lattice,
        *,
        transitive: bool = True,
        policy: ShipPolicy | None = None,
        store: DurableStore | None = None,
    ) -> None:
        self.id = node_id
        self.neighbors = tuple(sorted(set(neighbors) - {node_id}))
        self.transitive = transitive
        self.policy = policy if policy is not None else SizeThreshold(1.0)
        self.store: DurableStore = store if store is not None else MemoryStore()
        self._bottom = bottom.bottom()
        self.up = True
        self.state: Lattice = self._bottom
        self.group: Lattice = self._bottom
        loaded = self.store.load()
        if loaded is not None:
            self.state = loaded[0]
        else:
            self.store.save(self.state, 0)

    def _check_up(self) -> None:
        if not self.up:
            raise NodeDown(self.id)

    def on_operation(self, mutator: DeltaMutator) -> Lattice:
        self._check_up()
        d = mutator(self.state)
        new = self.state.join(d)
        if new is not self.state:
            self.store.save(new, 0)
            self.state = new
        self.group = self.group.join(d)
        return d

    def on_receive(self, payload: Lattice) -> None:
        self._check_up()
        new = self.state.join(payload)
        if new is not self.state:
            self.store.save(new, 0)
            self.state = new
        if self.transitive:
            self.group = self.group.join(payload)

    def periodic(self) -> list[BasicPayload]:
        """Broadcast ``choose(state, group)`` to every neighbour; reset the group."""
        self._check_up()
        payload, full = self.policy.choose(self.state, self.group)
        self.group = self._bottom
        return [BasicPayload(self.id, j, payload, full) for j in self.neighbors]

    def ship_state(self) -> list[BasicPayload]:
        """Broadcast the full state (a delta-group like any other)."""
        self._check_up()
        self.group = self._bottom
        return [BasicPayload(self.id, j, self.state, True) for j in self.neighbors]

    def crash(self) -> None:
        self.up = False
        self.state = None  # type: ignore[assignment]
        self.group = None  # type: ignore[assignment]

    def recover(self) -> None:
        loaded = self.store.load()
        self.state = loaded[0] if loaded is not None else self._bottom
        self.group = self._bottom
        self.up = True

    def crash_recover(self) -> None:
        self.crash()
        self.recover()

    def check_invariants(self) -> None:
        if self.up:
            assert self.group.leq(self.state), "buffered delta-group not joined into state"


# -- causal engine ------------------------------------------------------------


class CausalNode:
    """Delta-interval anti-entropy that preserves causal consistency.

    Durable: the state ``X`` and the sequence counter ``c``. Volatile: the
    delta log ``D`` (sequence number -> delta) and the ack map ``A``. A
    neighbour with ``A[j] == a`` receives ``Δ[a, c)``, or the full state
    when ``D`` no longer starts at or before ``a``.
    """

    def __init__(
        self,
        node_id: ReplicaId,
        neighbors: Iterable[ReplicaId],
        bottom: Lattice,
        *,
        store: DurableStore | None = None,
        max_buffer: int | None = None,
    ) -> None:
        self.id = node_id
        self.neighbors = tuple(sorted(set(neighbors) - {node_id}))
        self.store: DurableStore = store if store is not None else MemoryStore()
        self.max_buffer = max_buffer
        self._bottom = bottom.bottom()
        self.up = True
        self.state: Lattice = self._bottom
        self.counter = 0
        self.deltas: dict[int, Lattice] = {}
        self.acks: dict[ReplicaId, int] = {}
        loaded = self.store.load()
        if loaded is not None:
            self.state, self.counter = loaded
        else:
            self.store.save(self.state, 0)

    def _check_up(self) -> None:
        if not self.up:
            raise NodeDown(self.id)

    def _record(self, d: Lattice, new_state: Lattice) -> None:
        c = self.counter
        self.store.save(new_state, c + 1)
        self.state = new_state
        self.counter = c + 1
        self.deltas[c] = d
        if self.max_buffer is not None and len(self.deltas) > self.max_buffer:
            del self.deltas[next(iter(self.deltas))]

    def on_operation(self, mutator: DeltaMutator) -> Lattice:
        self._check_up()
        d = mutator(self.state)
        self._record(d, self.state.join(d))
        return d

    def on_receive_delta(self, payload: Lattice, seq: int, src: ReplicaId) -> Ack:
        """Join ``payload`` unless already subsumed; always acknowledge ``seq``."""
        self._check_up()
        if not payload.leq(self.state):
            self._record(payload, self.state.join(payload))
        return Ack(self.id, src, seq)

    def on_receive_ack(self, seq: int, src: ReplicaId) -> None:
        self._check_up()
        self.acks[src] = max(self.acks.get(src, 0), seq)

    def pending(self, j: ReplicaId) -> bool:
        return self.acks.get(j, 0) < self.counter

    def idle(self) -> bool:
        """True when every neighbour has acknowledged everything."""
        return not any(self.pending(j) for j in self.neighbors)

    def ship_to(self, j: ReplicaId) -> Delta | None:
        self._check_up()
        a = self.acks.get(j, 0)
        c = self.counter
        if a >= c:
            return None
        deltas = self.deltas
        if not deltas or next(iter(deltas)) > a:
            return Delta(self.id, j, self.state, c, 0, True)
        d = deltas[a]
        for n in range(a + 1, c):
            d = d.join(deltas[n])
        return Delta(self.id, j, d, c, a, False)

    def periodic_ship(self, rng: random.Random) -> Delta | None:
        """Pick a random neighbour and send it what it has not acknowledged."""
        self._check_up()
        if not self.neighbors:
            return None
        return self.ship_to(rng.choice(self.neighbors))

    def periodic_gc(self) -> None:
        """Drop deltas acknowledged by every neighbour."""
        self._check_up()
        if not self.deltas:
            return
        low = min((self.acks.get(j, 0) for j in self.neighbors), default=self.counter)
        if next(iter(self.deltas)) < low:
            self.deltas = {n: d for n, d in self.deltas.items() if n >= low}

    def crash(self) -> None:
        self.up = False
        self.state = None  # type: ignore[assignment]
        self.deltas = {}
        self.acks = {}

    def recover(self) -> None:
        loaded = self.store.load()
        if loaded is None:
            self.state, self.counter = self._bottom, 0
        else:
            self.state, self.counter = loaded
        self.deltas = {}
        self.acks = {}
        self.up = True

    def crash_recover(self) -> None:
        self.crash()
        self.recover()

    def check_invariants(self) -> None:
        if not self.up:
            return
        keys = list(self.deltas)
        if keys:
            assert keys == list(range(keys[0], keys[0] + len(keys))), "delta log not contiguous"
            assert keys[-1] == self.counter - 1, "delta log does not end at c - 1"
        for j, n in self.acks.items():
            assert n <= self.counter, f"ack {n} from {j!r} exceeds counter {self.counter}"
