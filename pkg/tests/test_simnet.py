import pytest

from deltacrdt import simnet
from deltacrdt.causal_types import AWSet
from deltacrdt.cli import bundled_dir
from deltacrdt.protocol import CausalNode, Delta, MemoryStore
from deltacrdt.scenario import (
    CrashSpec,
    EngineConfig,
    FaultConfig,
    PartitionSpec,
    Scenario,
    ScriptedOp,
    Workload,
    load,
)

CHAOS = FaultConfig(drop=0.3, dup=0.3, max_delay=6)


def causal(datatype, replicas=3, **kw):
    kw.setdefault("engine", EngineConfig(kind="causal"))
    return Scenario.build(datatype, replicas, **kw)


def test_single_node_sends_nothing():
    sc = Scenario.build("gcounter", 1, workload=Workload(5, 10))
    r = simnet.run(sc)
    assert r.converged and r.messages == 0
    assert r.nodes[0].value == "5"


def test_bundled_gcounter_reaches_thirty():
    r = simnet.run(load(bundled_dir() / "gcounter-3node.toml"))
    assert r.ok
    assert {n.value for n in r.nodes} == {"30"}


@pytest.mark.parametrize("kind", ["basic", "state", "causal"])
def test_every_engine_converges_under_faults(kind):
    sc = Scenario.build("awset(str)", 4, engine=EngineConfig(kind=kind), faults=CHAOS,
                        workload=Workload(20, 60), seed=3)
    r = simnet.run(sc)
    assert r.ok, r.failures


def test_ring_topology_and_partition():
    sc = causal("rwset(str)", 5, kind="ring", faults=CHAOS, workload=Workload(15, 80), seed=8,
                partitions=(PartitionSpec(10, (("r0", "r1"), ("r2", "r3", "r4"))), PartitionSpec(60, ())))
    r = simnet.run(sc)
    assert r.ok and r.contiguous


def test_same_seed_same_report_and_different_seed_differs():
    sc = causal("ormap(str, awset(int))", 3, faults=CHAOS, workload=Workload(15, 50), seed=4)
    a, b = simnet.run(sc), simnet.run(sc)
    assert a == b and a.fingerprint() == b.fingerprint()
    assert simnet.run(sc.with_seed(5)).fingerprint() != a.fingerprint()


def test_empty_scenario_is_quiet():
    sc = load(bundled_dir() / "empty.toml")
    r = simnet.run(sc)
    assert r.converged and r.messages == 0
    t = simnet.twin_run(sc)
    assert t.ok and t.equivalent


def test_twin_on_crash_scenario():
    t = simnet.twin_run(load(bundled_dir() / "crash-recovery.toml"))
    assert t.ok and t.equivalent
    assert t.delta.merge_checks > 0 and t.delta.merge_violations == 0
    assert t.aligned_checks > 0
    assert t.delta.contiguous


def test_twin_requires_causal_engine():
    with pytest.raises(ValueError):
        simnet.twin_run(Scenario.build("gcounter", 2))


def test_scripted_ops_and_crash_between_operation_and_ship():
    sc = causal("awset(str)", 2,
                ops=(ScriptedOp(3, "r0", "add", ("x",)),),
                crashes=(CrashSpec("r0", 3, 10),),
                engine=EngineConfig(kind="causal", ship_period=5))
    r = simnet.run(sc)
    assert r.ok
    assert {n.value for n in r.nodes} == {'["x"]'}


def test_node_still_down_at_end_of_script_recovers_for_quiescence():
    sc = causal("gcounter", 3, workload=Workload(5, 20), crashes=(CrashSpec("r1", 10),), seed=2)
    r = simnet.run(sc)
    assert r.ok
    assert all(n.up for n in r.nodes)


def test_without_eventual_delivery_isolated_nodes_diverge():
    r = simnet.run(load(bundled_dir() / "partition-no-delivery.toml"))
    assert not r.converged and not r.ok


def test_duplicates_only_still_converge():
    sc = Scenario.build("gset(int)", 3, faults=FaultConfig(dup=1.0), workload=Workload(10, 30))
    r = simnet.run(sc)
    assert r.ok and r.duplicated > 0


def test_budget_exhaustion_raises_with_pending_events():
    sc = Scenario.build("gcounter", 3, workload=Workload(50, 100), faults=FaultConfig(budget=50))
    with pytest.raises(simnet.SimulationError, match="no quiescence after 50 events"):
        simnet.run(sc)


def test_byte_accounting():
    sc = Scenario.build("gset(int)", 3, engine=EngineConfig(policy="delta"), workload=Workload(10, 40))
    r = simnet.run(sc)
    assert r.delta_bytes > 0
    assert r.delta_bytes == sum(n.delta_bytes for n in r.nodes)
    assert r.state_bytes == sum(n.state_bytes for n in r.nodes)
    quiet = simnet.run(sc, measure_bytes=False)
    assert quiet.delta_bytes == 0 and quiet.nodes[0].digest == r.nodes[0].digest


def test_report_formats():
    r = simnet.run(load(bundled_dir() / "gcounter-3node.toml"))
    text = r.to_text()
    assert text.startswith("scenario gcounter-3node seed 7 engine basic datatype gcounter\nconverged yes\n")
    rows = r.to_csv().splitlines()
    assert rows[0] == ",".join(simnet.SimReport.CSV_COLUMNS)
    assert len(rows) == 1 + len(r.nodes)
    assert rows[1].startswith("r0,")


# -- the checks catch broken engines -------------------------------------------------


def test_merge_check_fires_when_engine_skips_deltas(monkeypatch):
    def ship_last_only(self, j):
        c = self.counter
        if self.acks.get(j, 0) >= c or not self.deltas:
            return None
        return Delta(self.id, j, self.deltas[c - 1], c, c - 1, False)

    monkeypatch.setattr(CausalNode, "ship_to", ship_last_only)
    sc = causal("awset(str)", 3, faults=FaultConfig(drop=0.3, max_delay=6, eventual_delivery=False),
                workload=Workload(15, 40), seed=1)
    r = simnet.run(sc)
    assert r.merge_violations > 0
    assert any("delta-merging" in f for f in r.failures)


def test_sequence_regression_detected_when_counter_is_not_durable(monkeypatch):
    class ForgetfulStore(MemoryStore):
        def save(self, state, counter):
            super().save(state, 0)

    monkeypatch.setattr(simnet, "MemoryStore", ForgetfulStore)
    sc = causal("gcounter", 2, workload=Workload(5, 20), crashes=(CrashSpec("r0", 15, 16),),
                faults=FaultConfig(eventual_delivery=False))
    r = simnet.run(sc)
    assert r.seq_regressions > 0 and not r.ok


def test_twin_detects_a_wrong_delta(monkeypatch):
    # remove forgets to cover the element's dots, so the element survives
    monkeypatch.setattr(AWSet, "remove_delta", lambda self, i, e: AWSet())
    sc = causal("awset(str)", 2, ops=(ScriptedOp(1, "r0", "add", ("x",)), ScriptedOp(2, "r0", "remove", ("x",))))
    t = simnet.twin_run(sc)
    assert not t.equivalent and t.divergence
