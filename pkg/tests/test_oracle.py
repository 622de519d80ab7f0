import random

from hypothesis import given
from hypothesis import strategies as st

from deltacrdt import oracle
from deltacrdt.causal_types import AWSet, ORMap
from deltacrdt.primitives import GCounter

from helpers import PORTFOLIO, reachable

PAIRS = sorted((spec, name) for spec, dt in PORTFOLIO.items() for name in dt.ops)


@given(st.sampled_from(PAIRS).flatmap(
    lambda p: st.tuples(st.just(p), reachable(PORTFOLIO[p[0]]), st.randoms(use_true_random=False))
))
def test_decomposition_for_every_op(args):
    (spec, name), state, rng = args
    dt = PORTFOLIO[spec]
    op_args = dt.ops[name].gen(rng, rng.randrange(1, 50))
    i = rng.choice(["r0", "r1", "r2"])
    assert oracle.check_decomposition(dt.full_mutator(name, i, op_args), dt.delta_mutator(name, i, op_args), state)


@given(st.dictionaries(st.sampled_from("abcd"), st.integers(1, 20), max_size=4), st.sampled_from("abcd"))
def test_gcounter_full_mutator_matches_delta_form(entries, i):
    x = GCounter(entries)
    assert oracle.gcounter_inc(x, i) == x.join(x.inc_delta(i))
    assert oracle.gcounter_inc(x, i).value() == x.value() + 1


def test_every_op_decomposes_at_bottom():
    rng = random.Random(3)
    for spec, name in PAIRS:
        dt = PORTFOLIO[spec]
        args = dt.ops[name].gen(rng, 1)
        assert oracle.check_decomposition(dt.full_mutator(name, "r0", args), dt.delta_mutator(name, "r0", args),
                                          dt.bottom), (spec, name)


def test_nested_apply_decomposes():
    m = ORMap.of(AWSet())
    m = m.join(m.apply_delta("i", "k", lambda v: v.add_delta("i", 1)))
    full = lambda x: oracle.ormap_apply(x, "j", "k", lambda v: oracle.awset_add(v, "j", 2))  # noqa: E731
    delta = lambda x: x.apply_delta("j", "k", lambda v: v.add_delta("j", 2))  # noqa: E731
    assert oracle.check_decomposition(full, delta, m)


def test_derived_full_mutator():
    inc = oracle.derived(lambda s: s.inc_delta("i"))
    assert inc(GCounter({"i": 2, "j": 1})) == GCounter({"i": 3, "j": 1})


def test_check_decomposition_catches_a_wrong_delta():
    wrong = lambda s: GCounter({"i": 5})  # noqa: E731
    assert not oracle.check_decomposition(lambda s: oracle.gcounter_inc(s, "i"), wrong, GCounter({"i": 1}))


# -- full-state engine -------------------------------------------------------------


def pair():
    return oracle.OracleNode("a", ["b"], GCounter()), oracle.OracleNode("b", ["a"], GCounter())


def test_two_nodes_converge_after_exchange():
    a, b = pair()
    a.on_operation(lambda s: oracle.gcounter_inc(s, "a"))
    b.on_operation(lambda s: oracle.gcounter_inc(s, "b"))
    rng = random.Random(0)
    for _ in range(2):
        for m in a.periodic(rng):
            b.on_receive(m.payload)
        for m in b.periodic(rng):
            a.on_receive(m.payload)
    assert a.state == b.state and a.state.value() == 2


def test_duplicate_delivery_is_harmless():
    a, b = pair()
    a.on_operation(lambda s: oracle.gcounter_inc(s, "a"))
    (m,) = a.ship_state()
    b.on_receive(m.payload)
    b.on_receive(m.payload)
    assert b.state == GCounter({"a": 1})


def test_fresh_nodes_stay_bottom():
    a, b = pair()
    for m in a.ship_state():
        b.on_receive(m.payload)
    assert a.state == b.state == GCounter()


def test_oracle_node_recovers_durable_state():
    a, _ = pair()
    a.on_operation(lambda s: oracle.gcounter_inc(s, "a"))
    a.crash()
    a.recover()
    assert a.state == GCounter({"a": 1})
