import pytest
from hypothesis import given
from hypothesis import strategies as st

from deltacrdt.causal import (
    EMPTY_CONTEXT,
    Causal,
    CausalContext,
    Dot,
    DotFun,
    DotMap,
    DotSet,
    dots,
)
from deltacrdt.lattice import MaxInt
from deltacrdt.oracle import NaiveContext

from helpers import contexts, ctx, dot_sets, dots as dot_strategy, replica_ids

d1, d2 = Dot("i", 1), Dot("j", 1)


def denotation(c: CausalContext) -> set:
    return set(c.dots())


# -- contexts -----------------------------------------------------------------


def test_max_examples():
    assert EMPTY_CONTEXT.max("i") == 0
    assert ctx(("i", 1), ("i", 4), ("j", 2)).max("i") == 4
    assert CausalContext.make({"i": 3}).max("i") == 3


def test_next_examples():
    assert EMPTY_CONTEXT.next("i") == Dot("i", 1)
    assert ctx(("i", 2)).next("i") == Dot("i", 3)
    assert ctx(("j", 9)).next("i") == Dot("i", 1)


def test_compact_absorbs_contiguous_prefix():
    c = CausalContext.make({"i": 1}, {("i", 2), ("i", 3), ("i", 5)})
    assert c.vector == {"i": 3}
    assert c.cloud == frozenset({("i", 5)})


def test_contains_and_union_examples():
    c = CausalContext.make({"i": 3})
    assert c.contains(("i", 2))
    assert not c.contains(("i", 4))
    assert c.union(c) == c


@given(dot_sets)
def test_compaction_is_lossless(ds):
    c = CausalContext.from_dots(ds)
    assert denotation(c) == set(ds)
    for r, n in c.cloud:
        assert n > c.vector.get(r, 0) + 1


@given(dot_sets, dot_sets, dot_strategy, replica_ids)
def test_context_ops_agree_with_naive_oracle(xs, ys, d, i):
    a, b = CausalContext.from_dots(xs), CausalContext.from_dots(ys)
    na, nb = NaiveContext(xs), NaiveContext(ys)
    assert a.max(i) == na.max(i)
    assert a.next(i) == na.next(i)
    assert a.contains(d) == na.contains(d)
    assert NaiveContext(a.insert(d).dots()) == na.insert(d)
    assert NaiveContext(a.union(b).dots()) == na.union(nb)
    assert a.leq(b) == (na.dots <= nb.dots)
    assert len(a) == len(na.dots)


@given(dot_sets, dot_sets)
def test_representation_is_canonical(xs, ys):
    # two ways of building the same dot set give structurally equal contexts
    a = CausalContext.from_dots(xs).union(CausalContext.from_dots(ys))
    b = CausalContext.from_dots(xs | ys)
    assert a == b


@given(contexts(), contexts(), contexts())
def test_context_lattice_laws(a, b, c):
    assert a.join(b) == b.join(a)
    assert a.join(b.join(c)) == a.join(b).join(c)
    assert a.join(a) == a
    assert a.join(EMPTY_CONTEXT) == a


# -- dot stores -----------------------------------------------------------------


def test_dots_of_each_store():
    assert dots(DotSet(frozenset({d1, d2}))) == {d1, d2}
    assert dots(DotFun({d1: "v"})) == {d1}
    assert dots(DotMap({"k": DotSet(frozenset({d1})), "k2": DotSet(frozenset({d2}))})) == {d1, d2}


def causal(store, *ds):
    return Causal(store, ctx(*ds))


def test_dotset_join_drops_seen_and_absent():
    left = causal(DotSet(frozenset({d1})), d1)
    assert left.join(causal(DotSet(), d1)) == causal(DotSet(), d1)


def test_dotset_join_keeps_unseen():
    left = causal(DotSet(frozenset({d1})), d1)
    assert left.join(Causal(DotSet(), EMPTY_CONTEXT)) == left
    assert left.join(left) == left


def test_dotfun_common_dot_joins_values():
    a = causal(DotFun({d1: MaxInt(3)}), d1)
    b = causal(DotFun({d1: MaxInt(5)}), d1)
    assert a.join(b) == causal(DotFun({d1: MaxInt(5)}), d1)


def test_dotfun_seen_and_absent_is_dropped():
    a = causal(DotFun({d1: "a"}), d1)
    assert a.join(causal(DotFun(), d1)) == causal(DotFun(), d1)
    assert causal(DotFun()).join(a) == a


def test_dotfun_conflicting_plain_payloads_raise():
    with pytest.raises(ValueError):
        causal(DotFun({d1: "a"}), d1).join(causal(DotFun({d1: "b"}), d1))


def test_dotmap_key_removed_when_its_dots_are_covered():
    a = causal(DotMap({"k": DotSet(frozenset({d1}))}), d1)
    assert a.join(causal(DotMap(), d1)) == causal(DotMap(), d1)


def test_dotmap_concurrent_dots_preserved():
    a = causal(DotMap({"k": DotSet(frozenset({d1}))}), d1)
    b = causal(DotMap({"k": DotSet(frozenset({d2}))}), d2)
    assert a.join(b) == causal(DotMap({"k": DotSet(frozenset({d1, d2}))}), d1, d2)
    assert a.join(causal(DotMap())) == a


# -- random well-formed causal states -------------------------------------------


@st.composite
def dotset_states(draw):
    c = draw(dot_sets)
    live = draw(st.sets(st.sampled_from(sorted(c)))) if c else set()
    return Causal(DotSet(frozenset(live)), CausalContext.from_dots(c))


@st.composite
def dotmap_states(draw):
    c = draw(dot_sets)
    keys = draw(st.lists(st.sampled_from("xyz"), max_size=len(c))) if c else []
    entries: dict = {}
    for k, d in zip(keys, sorted(c)):
        entries.setdefault(k, set()).add(d)
    store = DotMap({k: DotSet(frozenset(v)) for k, v in entries.items()})
    return Causal(store, CausalContext.from_dots(c))


@given(st.one_of(st.tuples(dotset_states(), dotset_states(), dotset_states()),
                 st.tuples(dotmap_states(), dotmap_states(), dotmap_states())))
def test_causal_join_laws(abc):
    a, b, c = abc
    assert a.join(b) == b.join(a)
    assert a.join(b.join(c)) == a.join(b).join(c)
    assert a.join(a) == a
    assert a.join(a.bottom()) == a


@given(dotmap_states(), dotmap_states())
def test_dotmap_join_has_no_bottom_entries_and_stays_well_formed(a, b):
    j = a.join(b)
    assert all(not v.is_bottom() for v in j.store.entries.values())
    assert j.well_formed()
