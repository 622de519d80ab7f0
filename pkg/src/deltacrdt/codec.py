"""Canonical byte encoding for lattice values and protocol messages.

Layout is tag-length-value. Every lattice value starts with a one-byte type
tag. Maps and sets are written as a ``u32`` count followed by their entries
sorted by the encoded bytes of the key, so the output depends only on the
value and never on how it was built. Counters are fixed-width big-endian.

Keys, elements, replica ids and register payloads are "scalars": ``int``
(signed 64-bit), ``str``, ``bytes``, ``bool``, ``None`` or tuples of those.

Snapshot files (used by :class:`deltacrdt.protocol.FileStore`) are::

    b"DCRS" | u8 version | u8 type tag | u64 sequence counter | encoded value
"""

from __future__ import annotations

import hashlib
import struct
from typing import Any, Callable

from .causal import Causal, CausalContext, Dot, DotFun, DotMap, DotSet
from .causal_types import AWSet, EWFlag, MVRegister, ORMap, RWSet
from .lattice import LexPair, MaxInt, OrBool, Pair
from .primitives import AWLWWSet, GCounter, GSet, LexCounter, PNCounter, TwoPSet


class CodecError(ValueError):
    pass


class EncodeError(CodecError):
    pass


class DecodeError(CodecError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnsupportedTypeError(DecodeError):
    pass


class TypeMismatchError(DecodeError):
    pass


# -- scalars ----------------------------------------------------------------

S_INT, S_STR, S_BYTES, S_BOOL, S_NONE, S_TUPLE = 0x01, 0x02, 0x03, 0x04, 0x05, 0x06

_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")
_I64 = struct.Struct(">q")


def _u64(n: int) -> bytes:
    try:
        return _U64.pack(n)
    except struct.error:
        raise EncodeError(f"natural out of range: {n!r}") from None


def _i64(n: int) -> bytes:
    try:
        return _I64.pack(n)
    except struct.error:
        raise EncodeError(f"integer out of range: {n!r}") from None


def encode_scalar(x: Any) -> bytes:
    if x is True:
        return b"\x04\x01"
    if x is False:
        return b"\x04\x00"
    if x is None:
        return b"\x05"
    t = type(x)
    if t is str or isinstance(x, str):
        raw = x.encode("utf-8")
        return b"\x02" + _U32.pack(len(raw)) + raw
    if t is int or isinstance(x, int):
        return b"\x01" + _i64(x)
    if isinstance(x, bytes):
        return b"\x03" + _U32.pack(len(x)) + x
    if isinstance(x, tuple):
        return b"\x06" + _U32.pack(len(x)) + b"".join(encode_scalar(v) for v in x)
    raise EncodeError(f"unsupported scalar type: {type(x).__name__}")


def _dot(d) -> bytes:
    return encode_scalar(d[0]) + _u64(d[1])


def _sorted_set(items, enc: Callable[[Any], bytes]) -> bytes:
    parts = sorted(enc(x) for x in items)
    return _U32.pack(len(parts)) + b"".join(parts)


def _sorted_map(m: dict, enc_key: Callable, enc_val: Callable) -> bytes:
    parts = sorted((enc_key(k), enc_val(v)) for k, v in m.items())
    return _U32.pack(len(parts)) + b"".join(k + v for k, v in parts)


# -- lattice values -----------------------------------------------------------

TAGS: dict[type, int] = {
    MaxInt: 0x10,
    OrBool: 0x11,
    Pair: 0x12,
    LexPair: 0x13,
    GCounter: 0x20,
    PNCounter: 0x21,
    LexCounter: 0x22,
    GSet: 0x23,
    TwoPSet: 0x24,
    AWLWWSet: 0x25,
    CausalContext: 0x30,
    DotSet: 0x31,
    DotFun: 0x32,
    DotMap: 0x33,
    Causal: 0x34,
    EWFlag: 0x40,
    MVRegister: 0x41,
    AWSet: 0x42,
    RWSet: 0x43,
    ORMap: 0x44,
}


def _any(x: Any) -> bytes:
    enc = _ENCODERS.get(type(x))
    if enc is None:
        return encode_scalar(x)
    return enc(x)


def _context_body(c: CausalContext) -> bytes:
    return _sorted_map(c.vector, encode_scalar, _u64) + _sorted_set(c.cloud, _dot)


def _store(s) -> bytes:
    return _ENCODERS[type(s)](s)


def _causal(tag: int) -> Callable[[Causal], bytes]:
    prefix = bytes((tag,))

    def enc(x: Causal) -> bytes:
        return prefix + _store(x.store) + _context_body(x.ctx)

    return enc


def _lexcounter_entry(p: LexPair) -> bytes:
    return _u64(p.first.value) + _i64(p.second.value)


def _awlww_entry(p: LexPair) -> bytes:
    return _u64(p.first.value) + (b"\x01" if p.second.value else b"\x00")


_ENCODERS: dict[type, Callable[[Any], bytes]] = {
    MaxInt: lambda x: b"\x10" + _i64(x.value),
    OrBool: lambda x: b"\x11\x01" if x.value else b"\x11\x00",
    Pair: lambda x: b"\x12" + _any(x.first) + _any(x.second),
    LexPair: lambda x: b"\x13" + _any(x.first) + _any(x.second),
    GCounter: lambda x: b"\x20" + _sorted_map(x.entries, encode_scalar, _u64),
    PNCounter: lambda x: b"\x21" + _any(x.pos) + _any(x.neg),
    LexCounter: lambda x: b"\x22" + _sorted_map(x.entries, encode_scalar, _lexcounter_entry),
    GSet: lambda x: b"\x23" + _sorted_set(x.items, encode_scalar),
    TwoPSet: lambda x: b"\x24" + _sorted_set(x.added, encode_scalar) + _sorted_set(x.removed, encode_scalar),
    AWLWWSet: lambda x: b"\x25" + _sorted_map(x.entries, encode_scalar, _awlww_entry),
    CausalContext: lambda x: b"\x30" + _context_body(x),
    DotSet: lambda x: b"\x31" + _sorted_set(x.items, _dot),
    DotFun: lambda x: b"\x32" + _sorted_map(x.entries, _dot, _any),
    DotMap: lambda x: b"\x33" + _sorted_map(x.entries, encode_scalar, _store),
    Causal: _causal(0x34),
    EWFlag: _causal(0x40),
    MVRegister: _causal(0x41),
    AWSet: _causal(0x42),
    RWSet: _causal(0x43),
    ORMap: lambda x: b"\x44" + _any(x.proto) + _store(x.store) + _context_body(x.ctx),
}


def encode(x: Any) -> bytes:
    """Canonical bytes for a lattice value or protocol message."""
    enc = _ENCODERS.get(type(x))
    if enc is None:
        raise EncodeError(f"no encoding for {type(x).__name__}")
    return enc(x)


def encoded_size(x: Any) -> int:
    return len(encode(x))


def digest(x: Any) -> str:
    """SHA-256 hex digest of the canonical encoding."""
    return hashlib.sha256(encode(x)).hexdigest()


# -- decoding -----------------------------------------------------------------


class _Reader:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise DecodeError(f"truncated input (needed {n} bytes)", self.pos)
        out = self.data[self.pos:end]
        self.pos = end
        return out

    def u8(self) -> int:
        if self.pos >= len(self.data):
            raise DecodeError("truncated input (needed 1 byte)", self.pos)
        b = self.data[self.pos]
        self.pos += 1
        return b

    def peek(self) -> int:
        if self.pos >= len(self.data):
            raise DecodeError("truncated input (needed 1 byte)", self.pos)
        return self.data[self.pos]

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]

    def i64(self) -> int:
        return _I64.unpack(self.take(8))[0]

    def boolean(self) -> bool:
        at = self.pos
        b = self.u8()
        if b > 1:
            raise DecodeError(f"invalid boolean byte {b}", at)
        return b == 1


def decode_scalar(r: _Reader) -> Any:
    at = r.pos
    tag = r.u8()
    if tag == S_INT:
        return r.i64()
    if tag == S_STR:
        raw = r.take(r.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise DecodeError("invalid utf-8 string", at) from None
    if tag == S_BYTES:
        return r.take(r.u32())
    if tag == S_BOOL:
        return r.boolean()
    if tag == S_NONE:
        return None
    if tag == S_TUPLE:
        return tuple(decode_scalar(r) for _ in range(r.u32()))
    raise UnsupportedTypeError(f"unknown scalar tag 0x{tag:02x}", at)


def _read_dot(r: _Reader) -> Dot:
    return Dot(decode_scalar(r), r.u64())


def _read_ordered(r: _Reader, read_item: Callable[[_Reader], Any]) -> list:
    """Read ``count`` items, rejecting anything not in canonical order."""
    n = r.u32()
    out = []
    prev = None
    for _ in range(n):
        start = r.pos
        item = read_item(r)
        key = r.data[start:r.pos]
        if prev is not None and key <= prev:
            raise DecodeError("non-canonical ordering", start)
        prev = key
        out.append(item)
    return out


def _read_set(r: _Reader, read_item) -> frozenset:
    return frozenset(_read_ordered(r, read_item))


def _read_map(r: _Reader, read_key, read_val) -> dict:
    out = {}
    n = r.u32()
    prev = None
    for _ in range(n):
        start = r.pos
        k = read_key(r)
        raw = r.data[start:r.pos]
        if prev is not None and raw <= prev:
            raise DecodeError("non-canonical ordering", start)
        prev = raw
        out[k] = read_val(r)
    return out


def _read_context(r: _Reader) -> CausalContext:
    at = r.pos
    vector = _read_map(r, decode_scalar, _Reader.u64)
    cloud = _read_set(r, _read_dot)
    ctx = CausalContext(vector, cloud)
    if 0 in vector.values() or ctx.compact() != ctx:
        raise DecodeError("causal context is not compact", at)
    return ctx


def _read_any(r: _Reader) -> Any:
    tag = r.peek()
    if tag < 0x10:
        return decode_scalar(r)
    return _read_value(r)


def _read_store(r: _Reader):
    at = r.pos
    value = _read_value(r)
    if not isinstance(value, (DotSet, DotFun, DotMap)):
        raise DecodeError("expected a dot store", at)
    return value


def _lexcounter_val(r: _Reader) -> LexPair:
    return LexPair(MaxInt(r.u64()), MaxInt(r.i64()))


def _awlww_val(r: _Reader) -> LexPair:
    return LexPair(MaxInt(r.u64()), OrBool(r.boolean()))


def _causal_reader(cls):
    def read(r: _Reader):
        store = _read_store(r)
        return cls(store, _read_context(r))

    return read


def _read_ormap(r: _Reader) -> ORMap:
    at = r.pos
    proto = _read_value(r)
    if not isinstance(proto, Causal):
        raise DecodeError("ORMap proto must be a causal value", at)
    store = _read_store(r)
    return ORMap(store, _read_context(r), proto)


_DECODERS: dict[int, Callable[[_Reader], Any]] = {
    0x10: lambda r: MaxInt(r.i64()),
    0x11: lambda r: OrBool(r.boolean()),
    0x12: lambda r: Pair(_read_any(r), _read_any(r)),
    0x13: lambda r: LexPair(_read_any(r), _read_any(r)),
    0x20: lambda r: GCounter(_read_map(r, decode_scalar, _Reader.u64)),
    0x21: lambda r: PNCounter(_read_value(r), _read_value(r)),
    0x22: lambda r: LexCounter(_read_map(r, decode_scalar, _lexcounter_val)),
    0x23: lambda r: GSet(_read_set(r, decode_scalar)),
    0x24: lambda r: TwoPSet(_read_set(r, decode_scalar), _read_set(r, decode_scalar)),
    0x25: lambda r: AWLWWSet(_read_map(r, decode_scalar, _awlww_val)),
    0x30: _read_context,
    0x31: lambda r: DotSet(_read_set(r, _read_dot)),
    0x32: lambda r: DotFun(_read_map(r, _read_dot, _read_any)),
    0x33: lambda r: DotMap(_read_map(r, decode_scalar, _read_store)),
    0x34: _causal_reader(Causal),
    0x40: _causal_reader(EWFlag),
    0x41: _causal_reader(MVRegister),
    0x42: _causal_reader(AWSet),
    0x43: _causal_reader(RWSet),
    0x44: _read_ormap,
}

_registry_stack: list[dict[int, Callable]] = [_DECODERS]


def _read_value(r: _Reader) -> Any:
    at = r.pos
    tag = r.u8()
    reader = _registry_stack[-1].get(tag)
    if reader is None:
        raise UnsupportedTypeError(f"unsupported type tag 0x{tag:02x}", at)
    return reader(r)


def register(cls: type, tag: int, encoder: Callable[[Any], bytes], decoder: Callable[[_Reader], Any]) -> None:
    """Add a type to the default registry (used by the protocol messages)."""
    if tag in _DECODERS or cls in TAGS:
        raise ValueError(f"tag 0x{tag:02x} or type {cls.__name__} already registered")
    TAGS[cls] = tag
    _ENCODERS[cls] = encoder
    _DECODERS[tag] = decoder


def decode(data: bytes, expected: type | None = None, registry: dict[int, Callable] | None = None) -> Any:
    """Decode one value; the whole input must be consumed.

    ``expected`` checks the leading type tag before decoding. ``registry``
    restricts the accepted tags (defaults to every known type).
    """
    data = bytes(data)
    r = _Reader(data)
    if expected is not None:
        want = TAGS.get(expected)
        if want is None:
            raise EncodeError(f"{expected.__name__} has no registered tag")
        got = r.peek()
        if got != want:
            raise TypeMismatchError(
                f"expected {expected.__name__} (tag 0x{want:02x}), found tag 0x{got:02x}", 0
            )
    if registry is not None:
        _registry_stack.append(registry)
    try:
        value = _read_value(r)
    finally:
        if registry is not None:
            _registry_stack.pop()
    if r.pos != len(data):
        raise DecodeError("trailing bytes after value", r.pos)
    return value


def registry_for(*classes: type) -> dict[int, Callable]:
    """Decoder registry restricted to ``classes`` (and whatever they nest)."""
    wanted = {TAGS[c] for c in classes}
    nested = {TAGS[c] for c in (MaxInt, OrBool, CausalContext, DotSet, DotFun, DotMap)}
    return {t: f for t, f in _DECODERS.items() if t in wanted | nested}


# -- snapshots ----------------------------------------------------------------

SNAPSHOT_MAGIC = b"DCRS"
SNAPSHOT_VERSION = 1


def snapshot_bytes(value: Any, counter: int = 0) -> bytes:
    body = encode(value)
    return SNAPSHOT_MAGIC + bytes((SNAPSHOT_VERSION, body[0])) + _u64(counter) + body


def read_snapshot(data: bytes) -> tuple[Any, int]:
    """Parse a snapshot; returns ``(value, counter)``."""
    r = _Reader(bytes(data))
    if r.take(4) != SNAPSHOT_MAGIC:
        raise DecodeError("bad snapshot magic", 0)
    version = r.u8()
    if version != SNAPSHOT_VERSION:
        raise DecodeError(f"unsupported snapshot version {version}", 4)
    tag = r.u8()
    counter = r.u64()
    if r.pos < len(r.data) and r.data[r.pos] != tag:
        raise TypeMismatchError("snapshot header tag does not match body", r.pos)
    value = decode(r.data[r.pos:])
    return value, counter
