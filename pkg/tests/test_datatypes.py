import random

import pytest

from deltacrdt import datatypes
from deltacrdt.causal_types import ORMap
from deltacrdt.datatypes import SpecError, parse


@pytest.mark.parametrize("spec", datatypes.PORTFOLIO)
def test_portfolio_specs_parse_and_render(spec):
    dt = parse(spec)
    assert dt.spec == spec
    assert dt.bottom.is_bottom()
    assert parse(dt.spec).spec == spec


def test_spec_normalisation():
    assert parse("  ORMap( str ,awset( int ) ) ").spec == "ormap(str, awset(int))"
    assert parse("ormap(mvregister)").spec == "ormap(mvregister)"


def test_nested_maps():
    dt = parse("ormap(str, ormap(int, mvregister(str)))")
    assert isinstance(dt.bottom, ORMap) and isinstance(dt.bottom.proto, ORMap)
    x = dt.bottom
    for name, args in [("apply", ("a", "apply", 1, "write", "v")), ("apply", ("b", "apply", 2, "write", "w"))]:
        x = x.join(dt.delta_mutator(name, "r0", args)(x))
    assert dt.query(x) == [["a", [[1, ["v"]]]], ["b", [[2, ["w"]]]]]


@pytest.mark.parametrize(
    "bad, message",
    [
        ("", "empty"),
        ("nosuch", "unknown datatype"),
        ("gset(float)", "unknown element type"),
        ("gcounter(int)", "no type parameters"),
        ("gset(int, str)", "at most one"),
        ("ormap(gcounter)", "causal"),
        ("ormap(a, b, c)", "type parameters"),
        ("gset(int", "expected"),
        ("gset(int))", "trailing"),
        ("gset[int]", "column"),
    ],
)
def test_bad_specs(bad, message):
    with pytest.raises(SpecError, match=message):
        parse(bad)


def test_op_validation():
    dt = parse("awset(int)")
    assert dt.validate("add", [3]) == (3,)
    with pytest.raises(SpecError, match="no op"):
        dt.validate("insert", [3])
    with pytest.raises(SpecError):
        dt.validate("add", ["x"])
    with pytest.raises(SpecError):
        dt.validate("add", [True])
    with pytest.raises(SpecError):
        dt.validate("add", [])
    lww = parse("awlwwset(str)")
    assert lww.validate("insert", ["e1", 4]) == ("e1", 4)
    with pytest.raises(SpecError, match="timestamp"):
        lww.validate("insert", ["e1", -1])
    m = parse("ormap(str, awset(int))")
    assert m.validate("apply", ["k", "add", 1]) == ("k", "add", 1)
    with pytest.raises(SpecError):
        m.validate("apply", ["k", "add", "nope"])
    with pytest.raises(SpecError):
        m.validate("apply", ["k"])


@pytest.mark.parametrize("spec", datatypes.PORTFOLIO)
def test_random_ops_validate_and_apply(spec):
    dt = parse(spec)
    rng = random.Random(spec)
    x = dt.bottom
    for t in range(1, 60):
        name, args = dt.random_op(rng, t)
        dt.validate(name, args)
        x = x.join(dt.delta_mutator(name, "r0", args)(x))
    dt.query(x)


def test_mix_restricts_ops():
    dt = parse("twopset(int)")
    rng = random.Random(1)
    assert {dt.random_op(rng, 1, {"insert": 1})[0] for _ in range(50)} == {"insert"}
    with pytest.raises(SpecError):
        dt.random_op(rng, 1, {"bogus": 1})


@pytest.mark.parametrize("spec", datatypes.PORTFOLIO)
def test_grow_adds_something_new_each_step(spec):
    dt = parse(spec)
    x = dt.bottom
    for k in range(5):
        name, args = dt.grow(k)
        nxt = x.join(dt.delta_mutator(name, "r0", args)(x))
        assert nxt != x
        x = nxt
