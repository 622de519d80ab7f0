"""Seeded discrete-event network simulator for the anti-entropy engines.

Time is a logical tick. Events sit in a binary heap ordered by
``(time, kind rank, node order, insertion order)``, so runs are
reproducible event for event. Message loss and duplication are decided when
a message is sent, delay is uniform in ``[1, max_delay]``, and partitions
filter deliveries.

After the last scripted event the run enters one of two phases:

* with ``eventual_delivery``: faults are switched off, partitions heal,
  crashed nodes recover, and periodic shipping goes on until a fixpoint
  (nothing in flight, nothing left to ship);
* without it: the network stays as it is for ``settle`` more ticks.

Basic and state engines ship their full state in the quiescence phase,
since deltas lost earlier cannot be recovered any other way.
"""

from __future__ import annotations

import csv
import hashlib
import heapq
import io
import json
import random
from collections import deque
from dataclasses import dataclass
from itertools import count
from typing import Any

from . import codec
from .datatypes import DataType
from .oracle import OracleNode
from .protocol import (
    Ack,
    AlwaysDelta,
    AlwaysState,
    BasicNode,
    CausalNode,
    Delta,
    MemoryStore,
    SizeThreshold,
)
from .scenario import Scenario

# kind ranks: lower runs first within a tick
PARTITION, RECOVER, DELIVER, OPERATION, SHIP, GC, CRASH = range(7)
_KIND_NAMES = ("partition", "recover", "deliver", "operation", "ship", "gc", "crash")


class SimulationError(RuntimeError):
    """The run did not reach quiescence within its event budget."""


@dataclass(frozen=True)
class NodeReport:
    id: str
    digest: str
    value: str
    delta_bytes: int
    state_bytes: int
    messages: int
    counter: int | None = None
    up: bool = True


@dataclass(frozen=True)
class SimReport:
    scenario: str
    seed: int
    engine: str
    datatype: str
    nodes: tuple[NodeReport, ...]
    converged: bool
    messages: int = 0
    delivered: int = 0
    dropped: int = 0
    duplicated: int = 0
    delta_bytes: int = 0
    state_bytes: int = 0
    merge_checks: int = 0
    merge_violations: int = 0
    seq_regressions: int = 0
    invariant_failures: int = 0
    skipped_ops: int = 0
    contiguous: bool | None = None
    events: int = 0
    end_time: int = 0
    failures: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.converged and not self.failures

    CSV_COLUMNS = ("node", "digest", "converged", "delta_bytes", "state_bytes", "messages", "value")

    def rows(self) -> list[tuple]:
        conv = "true" if self.converged else "false"
        return [(n.id, n.digest, conv, n.delta_bytes, n.state_bytes, n.messages, n.value) for n in self.nodes]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        w.writerows(self.rows())
        return buf.getvalue()

    def to_text(self) -> str:
        contiguous = "n/a" if self.contiguous is None else ("yes" if self.contiguous else "no")
        lines = [
            f"scenario {self.scenario} seed {self.seed} engine {self.engine} datatype {self.datatype}",
            f"converged {'yes' if self.converged else 'no'}",
            f"messages {self.messages} delivered {self.delivered} dropped {self.dropped} duplicated {self.duplicated}",
            f"delta_bytes {self.delta_bytes} state_bytes {self.state_bytes}",
            f"merge_checks {self.merge_checks} merge_violations {self.merge_violations}"
            f" seq_regressions {self.seq_regressions} invariant_failures {self.invariant_failures}",
            f"skipped_ops {self.skipped_ops} contexts_contiguous {contiguous}",
            f"events {self.events} end_time {self.end_time}",
        ]
        for n in self.nodes:
            extra = "" if n.counter is None else f" counter {n.counter}"
            down = "" if n.up else " down"
            lines.append(f"node {n.id} digest {n.digest[:16]} value {n.value}{extra}{down}")
        for f in self.failures:
            lines.append(f"failure {f}")
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        return hashlib.sha256((self.to_text() + self.to_csv()).encode()).hexdigest()


@dataclass(frozen=True)
class TwinReport:
    delta: SimReport
    oracle: SimReport
    equivalent: bool
    aligned_checks: int
    divergence: str | None = None

    @property
    def ok(self) -> bool:
        return self.equivalent and self.delta.ok

    def to_text(self) -> str:
        lines = [
            f"equivalent {'yes' if self.equivalent else 'no'} aligned_checks {self.aligned_checks}",
            "-- delta engine",
            self.delta.to_text().rstrip("\n"),
            "-- full-state engine",
            self.oracle.to_text().rstrip("\n"),
        ]
        if self.divergence:
            lines.append(f"divergence {self.divergence}")
        return "\n".join(lines) + "\n"


def _value(dt: DataType, state) -> str:
    return json.dumps(dt.query(state), sort_keys=True, separators=(",", ":"), default=str)


def _same(a, b) -> bool:
    return a is b or (a is not None and a == b)


def _short(x: Any, limit: int = 400) -> str:
    s = repr(x)
    return s if len(s) <= limit else s[:limit] + "..."


@dataclass
class _Stats:
    messages: int = 0
    delta_bytes: int = 0
    state_bytes: int = 0


class Simulation:
    """One run of a scenario. Use :func:`run` or :func:`twin_run`."""

    def __init__(
        self,
        scenario: Scenario,
        *,
        twin: bool = False,
        measure_bytes: bool = True,
        check_invariants: bool = True,
        record_trace: int = 20,
    ) -> None:
        self.sc = scenario
        self.dt = scenario.dt
        self.kind = scenario.engine.kind
        if twin and self.kind != "causal":
            raise ValueError("twin runs need the causal engine")
        self.twin = twin
        self.measure_bytes = measure_bytes
        self.check_invariants = check_invariants
        seed = scenario.seed
        self.net_rng = random.Random(f"{seed}/network")
        self.work_rng = random.Random(f"{seed}/workload")
        self.engine_rng = random.Random(f"{seed}/engine")

        self.ids = scenario.replicas
        self.order = {n: k for k, n in enumerate(self.ids)}
        self.stores = {n: MemoryStore() for n in self.ids}
        self.nodes = {n: self._make_node(n) for n in self.ids}
        self.shadows = (
            {n: OracleNode(n, scenario.neighbors(n), self.dt.bottom) for n in self.ids} if twin else {}
        )
        self.stats = {n: _Stats() for n in self.ids}
        self.shadow_stats = {n: _Stats() for n in self.ids}

        self.heap: list = []
        self._seq = count()
        self.in_flight = 0
        self.partition: dict[str, int] | None = None
        self.faults_on = True
        self.phase = "run"
        self.deadline: int | None = None
        self.now = 0
        self.events = 0
        self.delivered = self.dropped = self.duplicated = 0
        self.skipped_ops = 0
        self.merge_checks = self.merge_violations = 0
        self.seq_regressions = 0
        self.invariant_failures = 0
        self.failures: list[str] = []
        self.trace: deque = deque(maxlen=record_trace)
        self.aligned_checks = 0
        self.divergence: str | None = None

        # delta-merging instrumentation: state of each node at each counter value
        self.history: dict[str, dict[int, Any]] = {}
        self.last_counter: dict[str, int] = {}
        if self.kind == "causal":
            for n, node in self.nodes.items():
                self.history[n] = {node.counter: node.state}
                self.last_counter[n] = node.counter
        self.last_shipped: dict[str, Any] = {}
        self._size_cache: tuple[Any, int] | None = None
        self.script_end = self._schedule_script()
        self._schedule_periodic()

    # -- setup ------------------------------------------------------------

    def _make_node(self, n: str):
        eng = self.sc.engine
        nbrs = self.sc.neighbors(n)
        bottom = self.dt.bottom
        if self.kind == "causal":
            return CausalNode(n, nbrs, bottom, store=self.stores[n], max_buffer=eng.max_buffer or None)
        if self.kind == "state":
            return OracleNode(n, nbrs, bottom, store=self.stores[n])
        policy = {"delta": AlwaysDelta, "state": AlwaysState}.get(eng.policy)
        return BasicNode(
            n, nbrs, bottom,
            transitive=eng.transitive,
            policy=policy() if policy else SizeThreshold(eng.ratio),
            store=self.stores[n],
        )

    def _push(self, time: int, rank: int, node: str | None, data: Any) -> None:
        order = self.order.get(node, -1) if node is not None else -1
        heapq.heappush(self.heap, (time, rank, order, next(self._seq), data))

    def _schedule_script(self) -> int:
        sc = self.sc
        end = 0
        for op in sc.ops:
            self._push(op.time, OPERATION, op.node, (op.node, op.op, tuple(op.args)))
            end = max(end, op.time)
        w = sc.workload
        if w.ops_per_replica:
            mix = dict(w.mix) or None
            for n in self.ids:
                times = sorted(self.work_rng.randint(1, w.duration) for _ in range(w.ops_per_replica))
                for t in times:
                    name, args = self.dt.random_op(self.work_rng, t, mix)
                    self._push(t, OPERATION, n, (n, name, args))
                    end = max(end, t)
        for c in sc.crashes:
            self._push(c.time, CRASH, c.node, c.node)
            end = max(end, c.time)
            if c.recover is not None:
                self._push(c.recover, RECOVER, c.node, c.node)
                end = max(end, c.recover)
        for p in sc.partitions:
            self._push(p.time, PARTITION, None, p.groups)
            end = max(end, p.time)
        return end

    def _schedule_periodic(self) -> None:
        eng = self.sc.engine
        for k, n in enumerate(self.ids):
            self._push(1 + k % eng.ship_period, SHIP, n, n)
            if self.kind == "causal":
                self._push(1 + k % eng.gc_period, GC, n, n)

    # -- network ------------------------------------------------------------

    def _size(self, payload) -> int:
        cached = self._size_cache
        if cached is not None and cached[0] is payload:
            return cached[1]
        size = codec.encoded_size(payload)
        self._size_cache = (payload, size)
        return size

    def _send(self, msg, shadow=None) -> None:
        src = msg.src
        st = self.stats[src]
        st.messages += 1
        if self.measure_bytes and not isinstance(msg, Ack):
            if msg.full:
                st.state_bytes += self._size(msg.payload)
            else:
                st.delta_bytes += self._size(msg.payload)
        if shadow is not None:
            sh = self.shadow_stats[src]
            sh.messages += 1
            if self.measure_bytes:
                sh.state_bytes += codec.encoded_size(shadow)
        copies = 1
        if self.faults_on:
            f = self.sc.faults
            if f.drop and self.net_rng.random() < f.drop:
                self.dropped += 1
                return
            if f.dup and self.net_rng.random() < f.dup:
                copies = 2
                self.duplicated += 1
        max_delay = self.sc.faults.max_delay if self.faults_on else 1
        for _ in range(copies):
            delay = self.net_rng.randint(1, max_delay)
            self.in_flight += 1
            self._push(self.now + delay, DELIVER, msg.dst, (msg, shadow))

    def _blocked(self, a: str, b: str) -> bool:
        p = self.partition
        return p is not None and p.get(a, -1) != p.get(b, -2)

    # -- checks ---------------------------------------------------------------

    def _fail(self, what: str) -> None:
        if len(self.failures) < 10:
            trace = "; ".join(self._describe(e) for e in self.trace)
            self.failures.append(f"t={self.now} {what} [recent: {trace}]")

    def _describe(self, ev) -> str:
        time, rank, _, _, data = ev
        if rank == DELIVER:
            msg = data[0]
            kind = type(msg).__name__
            seq = getattr(msg, "seq", "")
            return f"{time}:deliver {kind}{seq} {msg.src}->{msg.dst}"
        if rank == OPERATION:
            return f"{time}:op {data[0]}.{data[1]}{list(data[2])}"
        return f"{time}:{_KIND_NAMES[rank]} {data}"

    def _after(self, n: str) -> None:
        """Bookkeeping after node ``n`` took a step."""
        node = self.nodes[n]
        if self.kind == "causal" and node.up:
            c = node.counter
            if c < self.last_counter[n]:
                self.seq_regressions += 1
                self._fail(f"sequence counter of {n} went from {self.last_counter[n]} to {c}")
            if c != self.last_counter[n]:
                self.history[n][c] = node.state
                self.last_counter[n] = c
        if self.check_invariants and node.up:
            try:
                node.check_invariants()
            except AssertionError as e:
                self.invariant_failures += 1
                self._fail(f"invariant at {n}: {e}")
        if self.twin:
            self._compare(n)

    def _compare(self, n: str) -> None:
        node, shadow = self.nodes[n], self.shadows[n]
        if not node.up:
            return
        self.aligned_checks += 1
        if node.state != shadow.state and self.divergence is None:
            ev = self._describe(self.trace[-1]) if self.trace else "start"
            self.divergence = (
                f"at {n} after {ev}: delta state {_short(node.state)} != full-state {_short(shadow.state)}"
            )

    def _merge_check(self, msg: Delta) -> None:
        if msg.full:
            return
        snap = self.history[msg.src].get(msg.start)
        self.merge_checks += 1
        if snap is None or not snap.leq(self.nodes[msg.dst].state):
            self.merge_violations += 1
            self._fail(f"delta-merging condition broken: {msg.src}[{msg.start},{msg.seq}) at {msg.dst}")

    # -- event handlers -------------------------------------------------------

    def _operation(self, data) -> None:
        n, name, args = data
        node = self.nodes[n]
        if not node.up:
            self.skipped_ops += 1
            return
        if self.kind == "state":
            node.on_operation(self.dt.full_mutator(name, n, args))
        else:
            node.on_operation(self.dt.delta_mutator(name, n, args))
        if self.twin:
            self.shadows[n].on_operation(self.dt.full_mutator(name, n, args))
        self._after(n)

    def _deliver(self, data) -> None:
        msg, shadow = data
        self.in_flight -= 1
        dst = msg.dst
        node = self.nodes[dst]
        if not node.up or self._blocked(msg.src, dst):
            self.dropped += 1
            return
        self.delivered += 1
        if isinstance(msg, Delta):
            self._merge_check(msg)
            ack = node.on_receive_delta(msg.payload, msg.seq, msg.src)
            if self.twin:
                self.shadows[dst].on_receive(shadow)
            self._after(dst)
            self._send(ack)
        elif isinstance(msg, Ack):
            node.on_receive_ack(msg.seq, msg.src)
            self._after(dst)
        else:
            node.on_receive(msg.payload)
            self._after(dst)

    def _ship(self, n: str) -> None:
        node = self.nodes[n]
        if not node.up:
            return
        quiesce = self.phase == "quiesce"
        if self.kind == "causal":
            msg = node.periodic_ship(self.engine_rng)
            if msg is not None:
                self._send(msg, self.shadows[n].state if self.twin else None)
        elif quiesce:
            if not _same(self.last_shipped.get(n), node.state):
                self.last_shipped[n] = node.state
                for m in node.ship_state():
                    self._send(m)
        else:
            msgs = node.periodic(self.engine_rng) if self.kind == "state" else node.periodic()
            for m in msgs:
                self._send(m)
        self._after(n)

    def _crash(self, n: str) -> None:
        node = self.nodes[n]
        if not node.up:
            return
        node.crash()
        if self.twin:
            self.shadows[n].crash()

    def _recover(self, n: str) -> None:
        node = self.nodes[n]
        if node.up:
            return
        node.recover()
        if self.twin:
            self.shadows[n].recover()
        self._after(n)

    def _enter_final_phase(self) -> None:
        if self.sc.faults.eventual_delivery:
            self.phase = "quiesce"
            self.faults_on = False
            self.partition = None
            for n in self.ids:
                self._recover(n)
            for n in self.ids:
                if self.nodes[n].state.is_bottom():
                    self.last_shipped[n] = self.nodes[n].state
                else:
                    self.last_shipped.pop(n, None)
        else:
            self.phase = "settle"
            self.deadline = self.script_end + self.sc.faults.settle

    def _fixpoint(self) -> bool:
        if self.in_flight:
            return False
        if self.kind == "causal":
            return all(node.idle() for node in self.nodes.values())
        return all(_same(self.last_shipped.get(n), node.state) for n, node in self.nodes.items())

    # -- main loop -----------------------------------------------------------

    def run(self) -> Simulation:
        budget = self.sc.faults.budget
        eng = self.sc.engine
        while self.heap:
            if self.phase == "run" and self.heap[0][0] > self.script_end:
                self._enter_final_phase()
            if self.phase == "quiesce" and self._fixpoint():
                break
            if self.phase == "settle" and self.heap[0][0] > self.deadline:
                break
            if self.events >= budget:
                pending = sorted(self.heap)[:10]
                raise SimulationError(
                    f"no quiescence after {self.events} events at t={self.now}; "
                    f"{self.in_flight} messages in flight; next events: "
                    + "; ".join(self._describe(e) for e in pending)
                )
            ev = heapq.heappop(self.heap)
            time, rank, _, _, data = ev
            self.now = time
            self.events += 1
            if rank != SHIP and rank != GC:
                self.trace.append(ev)
            if rank == DELIVER:
                self._deliver(data)
            elif rank == OPERATION:
                self._operation(data)
            elif rank == SHIP:
                self._ship(data)
                self._push(time + eng.ship_period, SHIP, data, data)
            elif rank == GC:
                if self.nodes[data].up:
                    self.nodes[data].periodic_gc()
                    self._after(data)
                self._push(time + eng.gc_period, GC, data, data)
            elif rank == CRASH:
                self._crash(data)
            elif rank == RECOVER:
                self._recover(data)
            elif rank == PARTITION:
                self.partition = {n: k for k, g in enumerate(data) for n in g} if data else None
        return self

    # -- reporting -------------------------------------------------------------

    def _final_state(self, node):
        if node.up:
            return node.state
        loaded = node.store.load()
        return loaded[0] if loaded is not None else self.dt.bottom

    def _report(self, nodes: dict, stats: dict, engine: str, with_checks: bool) -> SimReport:
        rows = []
        states = []
        for n in self.ids:
            node = nodes[n]
            state = self._final_state(node)
            states.append(state)
            st = stats[n]
            rows.append(NodeReport(
                id=n,
                digest=codec.digest(state),
                value=_value(self.dt, state),
                delta_bytes=st.delta_bytes,
                state_bytes=st.state_bytes,
                messages=st.messages,
                counter=getattr(node, "counter", None),
                up=node.up,
            ))
        contiguous = None
        if self.dt.is_causal:
            contiguous = all(s.ctx.is_contiguous() for s in states)
        return SimReport(
            scenario=self.sc.name,
            seed=self.sc.seed,
            engine=engine,
            datatype=self.dt.spec,
            nodes=tuple(rows),
            converged=len({r.digest for r in rows}) <= 1,
            messages=sum(s.messages for s in stats.values()),
            delivered=self.delivered,
            dropped=self.dropped,
            duplicated=self.duplicated,
            delta_bytes=sum(s.delta_bytes for s in stats.values()),
            state_bytes=sum(s.state_bytes for s in stats.values()),
            merge_checks=self.merge_checks if with_checks else 0,
            merge_violations=self.merge_violations if with_checks else 0,
            seq_regressions=self.seq_regressions if with_checks else 0,
            invariant_failures=self.invariant_failures if with_checks else 0,
            skipped_ops=self.skipped_ops,
            contiguous=contiguous,
            events=self.events,
            end_time=self.now,
            failures=tuple(self.failures) if with_checks else (),
        )

    def report(self) -> SimReport:
        return self._report(self.nodes, self.stats, self.kind, True)

    def twin_report(self) -> TwinReport:
        delta = self.report()
        shadow = self._report(self.shadows, self.shadow_stats, "state", False)
        return TwinReport(
            delta=delta,
            oracle=shadow,
            equivalent=self.divergence is None
            and [r.digest for r in delta.nodes] == [r.digest for r in shadow.nodes],
            aligned_checks=self.aligned_checks,
            divergence=self.divergence,
        )


def run(scenario: Scenario, **kw) -> SimReport:
    """Run ``scenario`` with its configured engine and return the report."""
    return Simulation(scenario, **kw).run().report()


def twin_run(scenario: Scenario, **kw) -> TwinReport:
    """Run the causal engine alongside the full-state engine on one schedule."""
    return Simulation(scenario, twin=True, **kw).run().twin_report()
