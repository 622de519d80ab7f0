"""Scenario description and TOML loader.

Schema (every table is optional except ``datatype``)::

    name = "gcounter-3node"
    datatype = "gcounter"           # e.g. "ormap(str, awset(int))"
    seed = 7

    [topology]
    replicas = 3                    # a count (ids r0, r1, ...) or a list of ids
    kind = "full"                   # full | ring | edges
    edges = [["r0", "r1"]]          # only for kind = "edges"; undirected

    [engine]
    kind = "basic"                  # basic | causal | state
    transitive = true               # basic only
    policy = "threshold"            # basic only: delta | state | threshold
    ratio = 1.0                     # threshold policy
    ship_period = 5
    gc_period = 20                  # causal only
    max_buffer = 0                  # causal only; 0 keeps every delta

    [faults]
    drop = 0.0
    dup = 0.0
    max_delay = 3
    eventual_delivery = true
    settle = 200                    # ticks run after the script when delivery is not guaranteed
    budget = 2000000                # event budget

    [workload]                      # random ops, drawn from the seed
    ops_per_replica = 10
    duration = 100                  # ops land uniformly on ticks 1..duration
    mix = { inc = 1 }               # op weights; defaults per datatype

    [[ops]]                         # scripted ops
    time = 3
    node = "r0"
    op = "add"
    args = ["x"]

    [[crash]]
    node = "r1"
    time = 40
    recover = 60                    # omit to stay down until the quiescence phase

    [[partition]]
    time = 10
    groups = [["r0"], ["r1", "r2"]] # [] heals
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import datatypes
from .datatypes import DataType, SpecError


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = ""
        if source or line:
            where = f"{source or '<scenario>'}" + (f":{line}" if line else "") + ": "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class ScriptedOp:
    time: int
    node: str
    op: str
    args: tuple = ()


@dataclass(frozen=True)
class CrashSpec:
    node: str
    time: int
    recover: int | None = None


@dataclass(frozen=True)
class PartitionSpec:
    time: int
    groups: tuple[tuple[str, ...], ...] = ()


@dataclass(frozen=True)
class FaultConfig:
    drop: float = 0.0
    dup: float = 0.0
    max_delay: int = 3
    eventual_delivery: bool = True
    settle: int = 200
    budget: int = 2_000_000

    def __post_init__(self):
        for name in ("drop", "dup"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ScenarioError(f"faults.{name} must be in [0, 1], got {p}")
        if self.max_delay < 1:
            raise ScenarioError(f"faults.max_delay must be >= 1, got {self.max_delay}")


@dataclass(frozen=True)
class EngineConfig:
    kind: str = "basic"
    transitive: bool = True
    policy: str = "threshold"
    ratio: float = 1.0
    ship_period: int = 5
    gc_period: int = 20
    max_buffer: int = 0

    def __post_init__(self):
        if self.kind not in ("basic", "causal", "state"):
            raise ScenarioError(f"engine.kind must be basic, causal or state, got {self.kind!r}")
        if self.policy not in ("delta", "state", "threshold"):
            raise ScenarioError(f"engine.policy must be delta, state or threshold, got {self.policy!r}")
        if self.ship_period < 1 or self.gc_period < 1:
            raise ScenarioError("engine periods must be >= 1")
        if self.max_buffer < 0:
            raise ScenarioError("engine.max_buffer must be >= 0")


@dataclass(frozen=True)
class Workload:
    ops_per_replica: int = 0
    duration: int = 100
    mix: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class Scenario:
    datatype: str
    name: str = "scenario"
    seed: int = 0
    replicas: tuple[str, ...] = ("r0",)
    edges: tuple[tuple[str, str], ...] = ()
    engine: EngineConfig = field(default_factory=EngineConfig)
    faults: FaultConfig = field(default_factory=FaultConfig)
    workload: Workload = field(default_factory=Workload)
    ops: tuple[ScriptedOp, ...] = ()
    crashes: tuple[CrashSpec, ...] = ()
    partitions: tuple[PartitionSpec, ...] = ()

    @property
    def dt(self) -> DataType:
        return datatypes.parse(self.datatype)

    def neighbors(self, node: str) -> tuple[str, ...]:
        out = {b for a, b in self.edges if a == node} | {a for a, b in self.edges if b == node}
        return tuple(sorted(out, key=self.replicas.index))

    def connected(self) -> bool:
        if not self.replicas:
            return True
        seen = {self.replicas[0]}
        frontier = [self.replicas[0]]
        while frontier:
            n = frontier.pop()
            for m in self.neighbors(n):
                if m not in seen:
                    seen.add(m)
                    frontier.append(m)
        return len(seen) == len(self.replicas)

    @classmethod
    def build(cls, datatype: str, replicas: int | list[str] = 3, kind: str = "full", edges=(), **kw) -> Scenario:
        """Programmatic constructor mirroring the file schema."""
        ids = tuple(f"r{n}" for n in range(replicas)) if isinstance(replicas, int) else tuple(replicas)
        return cls(datatype=datatype, replicas=ids, edges=topology(ids, kind, edges), **kw).validate()

    def with_seed(self, seed: int) -> Scenario:
        return replace(self, seed=seed)

    def validate(self) -> Scenario:
        dt = self.dt
        ids = set(self.replicas)
        if len(ids) != len(self.replicas):
            raise ScenarioError("replica ids must be distinct")
        for a, b in self.edges:
            if a not in ids or b not in ids:
                raise ScenarioError(f"edge ({a}, {b}) names an unknown replica")
        if self.faults.eventual_delivery and not self.connected():
            raise ScenarioError("topology must be connected when eventual_delivery is on")
        for op in self.ops:
            if op.node not in ids:
                raise ScenarioError(f"op at t={op.time} names unknown replica {op.node!r}")
            dt.validate(op.op, op.args)
        for name, _ in self.workload.mix:
            dt.op(name)
        for c in self.crashes:
            if c.node not in ids:
                raise ScenarioError(f"crash names unknown replica {c.node!r}")
            if c.recover is not None and c.recover <= c.time:
                raise ScenarioError(f"crash of {c.node} recovers at {c.recover}, not after {c.time}")
        for p in self.partitions:
            for g in p.groups:
                for n in g:
                    if n not in ids:
                        raise ScenarioError(f"partition names unknown replica {n!r}")
        return self


def topology(replicas: tuple[str, ...], kind: str, edges=()) -> tuple[tuple[str, str], ...]:
    n = len(replicas)
    if kind == "full":
        return tuple((replicas[a], replicas[b]) for a in range(n) for b in range(a + 1, n))
    if kind == "ring":
        if n < 2:
            return ()
        if n == 2:
            return ((replicas[0], replicas[1]),)
        return tuple((replicas[a], replicas[(a + 1) % n]) for a in range(n))
    if kind == "edges":
        return tuple((str(a), str(b)) for a, b in edges)
    raise ScenarioError(f"topology.kind must be full, ring or edges, got {kind!r}")


def _table_lines(text: str, header: str) -> list[int]:
    """Line numbers of each ``[[header]]`` array-of-tables entry."""
    pat = re.compile(r"^\s*\[\[\s*" + re.escape(header) + r"\s*\]\]")
    return [n for n, line in enumerate(text.splitlines(), 1) if pat.match(line)]


def _key_line(text: str, key: str) -> int | None:
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for n, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return n
    return None


def _int(d: dict, key: str, default: int, where: str) -> int:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(f"{where}{key} must be an integer, got {v!r}")
    return v


def _float(d: dict, key: str, default: float, where: str) -> float:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{where}{key} must be a number, got {v!r}")
    return float(v)


def _bool(d: dict, key: str, default: bool, where: str) -> bool:
    v = d.get(key, default)
    if not isinstance(v, bool):
        raise ScenarioError(f"{where}{key} must be true or false, got {v!r}")
    return v


def loads(text: str, source: str | None = None) -> Scenario:
    """Parse and validate a scenario document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        m = re.search(r"line (\d+)", str(e))
        line = int(m.group(1)) if m else None
        if line is None and "end of document" in str(e):
            line = max(1, len(text.splitlines()))
        raise ScenarioError(f"TOML syntax error: {e}", line, source) from None
    try:
        return _from_doc(doc, text)
    except ScenarioError as e:
        raise ScenarioError(str(e), e.line, source) from None
    except SpecError as e:
        raise ScenarioError(str(e), _key_line(text, "datatype"), source) from None


def _section(doc: dict, name: str) -> dict:
    v = doc.get(name, {})
    if not isinstance(v, dict):
        raise ScenarioError(f"[{name}] must be a table")
    return v


def _from_doc(doc: dict, text: str) -> Scenario:
    known = {"name", "datatype", "seed", "topology", "engine", "faults", "workload", "ops", "crash", "partition"}
    for k in doc:
        if k not in known:
            raise ScenarioError(f"unknown key {k!r}", _key_line(text, k))
    if "datatype" not in doc:
        raise ScenarioError("missing required key 'datatype'")
    dt_spec = doc["datatype"]
    if not isinstance(dt_spec, str):
        raise ScenarioError("datatype must be a string", _key_line(text, "datatype"))
    datatypes.parse(dt_spec)

    topo = _section(doc, "topology")
    reps = topo.get("replicas", 1)
    if isinstance(reps, int) and not isinstance(reps, bool):
        if reps < 1:
            raise ScenarioError("topology.replicas must be >= 1", _key_line(text, "replicas"))
        replicas = tuple(f"r{n}" for n in range(reps))
    elif isinstance(reps, list) and reps:
        replicas = tuple(str(r) for r in reps)
    else:
        raise ScenarioError("topology.replicas must be a count or a list of ids", _key_line(text, "replicas"))
    edges = topology(replicas, topo.get("kind", "full"), topo.get("edges", ()))

    eng = _section(doc, "engine")
    engine = EngineConfig(
        kind=eng.get("kind", "basic"),
        transitive=_bool(eng, "transitive", True, "engine."),
        policy=eng.get("policy", "threshold"),
        ratio=_float(eng, "ratio", 1.0, "engine."),
        ship_period=_int(eng, "ship_period", 5, "engine."),
        gc_period=_int(eng, "gc_period", 20, "engine."),
        max_buffer=_int(eng, "max_buffer", 0, "engine."),
    )

    f = _section(doc, "faults")
    faults = FaultConfig(
        drop=_float(f, "drop", 0.0, "faults."),
        dup=_float(f, "dup", 0.0, "faults."),
        max_delay=_int(f, "max_delay", 3, "faults."),
        eventual_delivery=_bool(f, "eventual_delivery", True, "faults."),
        settle=_int(f, "settle", 200, "faults."),
        budget=_int(f, "budget", 2_000_000, "faults."),
    )

    w = _section(doc, "workload")
    mix = w.get("mix", {})
    if not isinstance(mix, dict) or not all(
        isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in mix.values()
    ):
        raise ScenarioError("workload.mix must be a table of positive integer op weights", _key_line(text, "mix"))
    workload = Workload(
        ops_per_replica=_int(w, "ops_per_replica", 0, "workload."),
        duration=max(1, _int(w, "duration", 100, "workload.")),
        mix=tuple(sorted((str(k), v) for k, v in mix.items())),
    )

    dt = datatypes.parse(dt_spec)
    for name in mix:
        try:
            dt.op(name)
        except SpecError as e:
            raise ScenarioError(f"workload.mix: {e}", _key_line(text, "mix")) from None
    ops = []
    op_lines = _table_lines(text, "ops")
    for n, entry in enumerate(doc.get("ops", [])):
        line = op_lines[n] if n < len(op_lines) else None
        try:
            op = ScriptedOp(
                time=_int(entry, "time", 0, "ops."),
                node=str(entry["node"]),
                op=str(entry["op"]),
                args=tuple(entry.get("args", ())),
            )
            if op.time < 0:
                raise ScenarioError("ops.time must be >= 0")
            dt.validate(op.op, op.args)
        except KeyError as e:
            raise ScenarioError(f"op is missing {e.args[0]!r}", line) from None
        except (ScenarioError, SpecError) as e:
            raise ScenarioError(str(e), line) from None
        ops.append(op)

    crashes = []
    crash_lines = _table_lines(text, "crash")
    for n, entry in enumerate(doc.get("crash", [])):
        line = crash_lines[n] if n < len(crash_lines) else None
        try:
            rec = entry.get("recover")
            crashes.append(CrashSpec(str(entry["node"]), _int(entry, "time", 0, "crash."),
                                     None if rec is None else _int(entry, "recover", 0, "crash.")))
        except KeyError as e:
            raise ScenarioError(f"crash is missing {e.args[0]!r}", line) from None

    partitions = []
    for entry in doc.get("partition", []):
        groups = tuple(tuple(str(x) for x in g) for g in entry.get("groups", []))
        partitions.append(PartitionSpec(_int(entry, "time", 0, "partition."), groups))

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ScenarioError("seed must be an integer", _key_line(text, "seed"))

    return Scenario(
        datatype=dt_spec,
        name=str(doc.get("name", "scenario")),
        seed=seed,
        replicas=replicas,
        edges=edges,
        engine=engine,
        faults=faults,
        workload=workload,
        ops=tuple(ops),
        crashes=tuple(crashes),
        partitions=tuple(partitions),
    ).validate()


def load(path: str | Path) -> Scenario:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), str(path))
