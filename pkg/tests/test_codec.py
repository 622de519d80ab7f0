import pytest
from hypothesis import given
from hypothesis import strategies as st

from deltacrdt import codec
from deltacrdt.causal import CausalContext
from deltacrdt.causal_types import AWSet, ORMap
from deltacrdt.codec import DecodeError, TypeMismatchError, UnsupportedTypeError
from deltacrdt.lattice import LexPair, MaxInt, OrBool, Pair
from deltacrdt.primitives import GCounter, GSet
from deltacrdt.protocol import Ack, BasicPayload, Delta

from helpers import PORTFOLIO, contexts, histories, triples

specs = st.sampled_from(sorted(PORTFOLIO))


def test_bottom_gcounter_is_tag_plus_empty_map():
    assert codec.encode(GCounter()) == b"\x20\x00\x00\x00\x00"


def test_single_entry_is_shorter_than_large_counter():
    big = GCounter({f"r{n}": 1 for n in range(100)})
    assert codec.encoded_size(GCounter({"i": 1})) < codec.encoded_size(big)


@given(specs.flatmap(lambda s: histories(PORTFOLIO[s])))
def test_roundtrip_portfolio_values(pool):
    for x in pool:
        data = codec.encode(x)
        y = codec.decode(data)
        assert y == x and type(y) is type(x)
        assert codec.decode(data, expected=type(x)) == x


def test_roundtrip_nested_map_keeps_proto():
    m = ORMap.of(ORMap.of(AWSet()))
    m = m.join(m.apply_delta("i", "a", lambda v: v.apply_delta("i", "b", lambda s: s.add_delta("i", 3))))
    y = codec.decode(codec.encode(m))
    assert y == m
    assert isinstance(y.proto, ORMap) and isinstance(y.proto.proto, AWSet)
    assert y.get("a").get("b").elements() == {3}


@given(contexts())
def test_roundtrip_contexts(c):
    assert codec.decode(codec.encode(c)) == c


@pytest.mark.parametrize(
    "value",
    [
        MaxInt(-3),
        OrBool(True),
        Pair(GCounter({"a": 1}), GSet(frozenset({(1, "x"), (2, "y")}))),
        LexPair(MaxInt(4), GSet(frozenset({b"raw", None, True}))),
    ],
)
def test_roundtrip_composites(value):
    assert codec.decode(codec.encode(value)) == value


@pytest.mark.parametrize(
    "msg",
    [
        Delta("a", "b", GCounter({"a": 2}), 5, 3, False),
        Delta("a", "b", GSet(frozenset({1})), 1, 0, True),
        Ack("b", "a", 5),
        BasicPayload("a", "c", GCounter(), True),
    ],
)
def test_roundtrip_messages(msg):
    assert codec.decode(codec.encode(msg)) == msg


@given(specs.flatmap(lambda s: triples(PORTFOLIO[s])))
def test_join_order_does_not_change_bytes(abc):
    a, b, c = abc
    assert codec.encode(a.join(b)) == codec.encode(b.join(a))
    assert codec.encode(a.join(b).join(c)) == codec.encode(a.join(b.join(c)))


@given(specs.flatmap(lambda s: triples(PORTFOLIO[s])))
def test_digest_equality_matches_value_equality(abc):
    a, b, _ = abc
    assert (codec.digest(a) == codec.digest(b)) == (a == b)


def test_construction_order_does_not_change_bytes():
    x = GSet(frozenset(["b", "a", "c"]))
    y = GSet(frozenset(["c", "b"])).join(GSet(frozenset(["a"])))
    assert codec.encode(x) == codec.encode(y)


def test_truncated_input_reports_offset():
    data = codec.encode(GCounter({"i": 7}))
    for cut in range(len(data)):
        with pytest.raises(DecodeError) as err:
            codec.decode(data[:cut])
        assert err.value.offset <= cut


def test_trailing_bytes_rejected():
    with pytest.raises(DecodeError, match="trailing"):
        codec.decode(codec.encode(GCounter()) + b"\x00")


def test_unknown_tag():
    with pytest.raises(UnsupportedTypeError) as err:
        codec.decode(b"\xee")
    assert err.value.offset == 0


def test_expected_type_mismatch():
    with pytest.raises(TypeMismatchError):
        codec.decode(codec.encode(GSet()), expected=GCounter)


def test_restricted_registry_rejects_other_types():
    reg = codec.registry_for(GCounter)
    assert codec.decode(codec.encode(GCounter({"a": 1})), registry=reg) == GCounter({"a": 1})
    with pytest.raises(UnsupportedTypeError):
        codec.decode(codec.encode(GSet()), registry=reg)


def test_non_canonical_order_rejected():
    good = codec.encode(GSet(frozenset({1, 2})))
    a, b = good[5:14], good[14:23]
    with pytest.raises(DecodeError, match="non-canonical"):
        codec.decode(good[:5] + b + a)


def test_non_compact_context_rejected():
    loose = CausalContext({"i": 1}, frozenset({("i", 2)}))
    with pytest.raises(DecodeError, match="not compact"):
        codec.decode(codec.encode(loose))


def test_snapshot_roundtrip_and_errors():
    x = GSet(frozenset({1, 2}))
    data = codec.snapshot_bytes(x, 9)
    assert data[:4] == b"DCRS"
    assert codec.read_snapshot(data) == (x, 9)
    with pytest.raises(DecodeError):
        codec.read_snapshot(b"XXXX" + data[4:])
    with pytest.raises(DecodeError):
        codec.read_snapshot(data[:4] + b"\x09" + data[5:])
    with pytest.raises(TypeMismatchError):
        codec.read_snapshot(data[:5] + b"\x20" + data[6:])
