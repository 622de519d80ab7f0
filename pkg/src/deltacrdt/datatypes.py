"""Datatype specs: parse ``ormap(str, awset(int))`` into bottoms and op tables.

Each op pairs a delta-mutator factory with an independent full-state mutator
(from :mod:`deltacrdt.oracle`) and a random argument generator, so the same
table drives scripted scenarios, random workloads and oracle checks.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable

from . import oracle
from .causal import Causal
from .causal_types import AWSet, EWFlag, MVRegister, ORMap, RWSet
from .lattice import Lattice, ReplicaId
from .primitives import AWLWWSet, GCounter, GSet, LexCounter, PNCounter, TwoPSet


class SpecError(ValueError):
    """Malformed datatype spec, unknown op or bad op arguments."""


ELEMENT_TYPES = {"str": str, "string": str, "int": int}
DOMAIN = 8


def _element(kind: type, n: int) -> Hashable:
    return f"e{n}" if kind is str else n


def _fresh(kind: type, k: int) -> Hashable:
    """Distinct fixed-width value number ``k``."""
    return f"e{k:07d}" if kind is str else k


def _check_element(kind: type, x: Any, what: str) -> None:
    if kind is int and (isinstance(x, bool) or not isinstance(x, int)):
        raise SpecError(f"{what} must be an int, got {x!r}")
    if kind is str and not isinstance(x, str):
        raise SpecError(f"{what} must be a string, got {x!r}")


@dataclass(frozen=True)
class Op:
    """One mutator.

    ``delta(i, args)`` and ``full(i, args)`` return single-argument callables
    mapping a state to a delta and to the next state respectively.
    ``gen(rng, time)`` draws random arguments.
    """

    name: str
    delta: Callable[[ReplicaId, tuple], Callable[[Any], Any]]
    full: Callable[[ReplicaId, tuple], Callable[[Any], Any]]
    gen: Callable[[random.Random, int], tuple]
    check: Callable[[tuple], None]
    weight: int = 1


@dataclass(frozen=True)
class DataType:
    spec: str
    bottom: Lattice
    ops: dict[str, Op] = field(compare=False)
    query: Callable[[Any], Any] = field(compare=False)
    grow: Callable[[int], tuple[str, tuple]] = field(compare=False, default=None)

    @property
    def is_causal(self) -> bool:
        return isinstance(self.bottom, Causal)

    def op(self, name: str) -> Op:
        try:
            return self.ops[name]
        except KeyError:
            raise SpecError(f"{self.spec} has no op {name!r} (known: {', '.join(sorted(self.ops))})") from None

    def validate(self, name: str, args) -> tuple:
        op = self.op(name)
        args = tuple(args)
        op.check(args)
        return args

    def delta_mutator(self, name: str, i: ReplicaId, args) -> Callable[[Any], Any]:
        return self.op(name).delta(i, tuple(args))

    def full_mutator(self, name: str, i: ReplicaId, args) -> Callable[[Any], Any]:
        return self.op(name).full(i, tuple(args))

    def random_op(self, rng: random.Random, time: int, mix: dict[str, int] | None = None) -> tuple[str, tuple]:
        if mix:
            names = sorted(mix)
            weights = [mix[n] for n in names]
            for n in names:
                self.op(n)
        else:
            names = sorted(self.ops)
            weights = [self.ops[n].weight for n in names]
        name = rng.choices(names, weights)[0]
        return name, self.ops[name].gen(rng, time)


def _arity(n: int, *checks: Callable[[Any], None]):
    def check(args: tuple) -> None:
        if len(args) != n:
            raise SpecError(f"expected {n} argument(s), got {len(args)}")
        for c, a in zip(checks, args):
            c(a)

    return check


def _no_args(rng, time):
    return ()


def _timestamp(t: Any) -> None:
    if isinstance(t, bool) or not isinstance(t, int) or t < 0:
        raise SpecError(f"timestamp must be a non-negative int, got {t!r}")


def _sorted_list(xs) -> list:
    return sorted(xs)


# -- builders ---------------------------------------------------------------


def _counter(name: str, bottom, ops: dict) -> DataType:
    table = {}
    for op_name, (delta_name, full_fn, weight) in ops.items():
        table[op_name] = Op(
            op_name,
            delta=lambda i, args, dn=delta_name: lambda x: getattr(x, dn)(i),
            full=lambda i, args, f=full_fn: lambda x: f(x, i),
            gen=_no_args,
            check=_arity(0),
            weight=weight,
        )
    return DataType(name, bottom, table, lambda x: x.value(), lambda k: ("inc", ()))


def _element_op(op_name, delta_name, full_fn, kind, weight, timestamped=False) -> Op:
    def elem(x):
        _check_element(kind, x, "element")

    if timestamped:
        return Op(
            op_name,
            delta=lambda i, a: lambda x: getattr(x, delta_name)(i, a[0], a[1]),
            full=lambda i, a: lambda x: full_fn(x, i, a[0], a[1]),
            gen=lambda rng, time: (_element(kind, rng.randrange(DOMAIN)), time),
            check=_arity(2, elem, _timestamp),
            weight=weight,
        )
    return Op(
        op_name,
        delta=lambda i, a: lambda x: getattr(x, delta_name)(i, a[0]),
        full=lambda i, a: lambda x: full_fn(x, i, a[0]),
        gen=lambda rng, time: (_element(kind, rng.randrange(DOMAIN)),),
        check=_arity(1, elem),
        weight=weight,
    )


def _nullary(op_name, delta_name, full_fn, weight) -> Op:
    return Op(
        op_name,
        delta=lambda i, a: lambda x: getattr(x, delta_name)(i),
        full=lambda i, a: lambda x: full_fn(x, i),
        gen=_no_args,
        check=_arity(0),
        weight=weight,
    )


def _set_type(spec, bottom, kind, ops, query, clear=None) -> DataType:
    table = {}
    for op_name, (delta_name, full_fn, weight, *flags) in ops.items():
        if kind is None:
            table[op_name] = _nullary(op_name, delta_name, full_fn, weight)
        else:
            table[op_name] = _element_op(op_name, delta_name, full_fn, kind, weight, bool(flags))
    if clear is not None:
        table["clear"] = _nullary("clear", "clear_delta", clear, 1)
    first, (_, _, _, *flags) = next(iter(ops.items()))
    if kind is None:
        def grow(k):
            return first, ()
    elif flags:
        def grow(k):
            return first, (_fresh(kind, k), k + 1)
    else:
        def grow(k):
            return first, (_fresh(kind, k),)
    return DataType(spec, bottom, table, query, grow)


def _mvregister(spec: str, kind: type) -> DataType:
    def value(x):
        _check_element(kind, x, "register value")

    table = {
        "write": Op(
            "write",
            delta=lambda i, a: lambda x: x.write_delta(i, a[0]),
            full=lambda i, a: lambda x: oracle.mvreg_write(x, i, a[0]),
            gen=lambda rng, time: (f"v{rng.randrange(DOMAIN)}" if kind is str else rng.randrange(DOMAIN),),
            check=_arity(1, value),
            weight=4,
        ),
        "clear": _nullary("clear", "clear_delta", oracle.mvreg_clear, 1),
    }
    return DataType(spec, MVRegister(), table, lambda x: _sorted_list(x.read()), lambda k: ("write", (_fresh(kind, k),)))


def _ormap(spec: str, key_kind: type, inner: DataType) -> DataType:
    if not inner.is_causal:
        raise SpecError(f"ormap values must be causal datatypes, got {inner.spec}")

    def key(x):
        _check_element(key_kind, x, "key")

    def check_apply(args: tuple) -> None:
        if len(args) < 2:
            raise SpecError("apply takes [key, op, *args]")
        key(args[0])
        if not isinstance(args[1], str):
            raise SpecError(f"nested op name must be a string, got {args[1]!r}")
        inner.validate(args[1], args[2:])

    def apply_delta(i, a):
        nested = inner.delta_mutator(a[1], i, a[2:])
        return lambda x: x.apply_delta(i, a[0], nested)

    def apply_full(i, a):
        nested = inner.full_mutator(a[1], i, a[2:])
        return lambda x: oracle.ormap_apply(x, i, a[0], nested)

    def gen_apply(rng, time):
        name, args = inner.random_op(rng, time)
        return (_element(key_kind, rng.randrange(DOMAIN)), name, *args)

    def query(x: ORMap):
        return [[k, inner.query(x.get(k))] for k in sorted(x.keys())]

    table = {
        "apply": Op("apply", apply_delta, apply_full, gen_apply, check_apply, weight=6),
        "remove": Op(
            "remove",
            delta=lambda i, a: lambda x: x.remove_delta(i, a[0]),
            full=lambda i, a: lambda x: oracle.ormap_remove(x, i, a[0]),
            gen=lambda rng, time: (_element(key_kind, rng.randrange(DOMAIN)),),
            check=_arity(1, key),
            weight=2,
        ),
        "clear": _nullary("clear", "clear_delta", oracle.ormap_clear, 1),
    }
    def grow(k):
        name, args = inner.grow(k)
        return "apply", (_fresh(key_kind, k), name, *args)

    return DataType(spec, ORMap.of(inner.bottom), table, query, grow)


# -- parsing ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*|[(),])")


def _tokenize(text: str) -> list[str]:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SpecError(f"bad datatype spec {text!r} at column {pos + 1}")
        out.append(m.group(1))
        pos = m.end()
    return out


def _parse_term(tokens: list[str], pos: int) -> tuple[tuple, int]:
    """``name`` or ``name(term, ...)`` as a nested ``(name, [args])`` tree."""
    if pos >= len(tokens) or not re.match(r"[A-Za-z_]", tokens[pos]):
        raise SpecError("expected a datatype name")
    name, pos = tokens[pos].lower(), pos + 1
    args: list = []
    if pos < len(tokens) and tokens[pos] == "(":
        pos += 1
        while True:
            arg, pos = _parse_term(tokens, pos)
            args.append(arg)
            if pos < len(tokens) and tokens[pos] == ",":
                pos += 1
                continue
            if pos < len(tokens) and tokens[pos] == ")":
                pos += 1
                break
            raise SpecError("expected ',' or ')' in datatype spec")
    return (name, args), pos


def _element_kind(term: tuple | None, default: type = str) -> type:
    if term is None:
        return default
    name, args = term
    if args or name not in ELEMENT_TYPES:
        raise SpecError(f"unknown element type {name!r} (use str or int)")
    return ELEMENT_TYPES[name]


def _render(term: tuple) -> str:
    name, args = term
    return name if not args else f"{name}({', '.join(_render(a) for a in args)})"


def _build(term: tuple) -> DataType:
    name, args = term
    spec = _render(term)

    def one_kind() -> type:
        if len(args) > 1:
            raise SpecError(f"{name} takes at most one type parameter")
        return _element_kind(args[0] if args else None)

    def no_params() -> None:
        if args:
            raise SpecError(f"{name} takes no type parameters")

    if name == "gcounter":
        no_params()
        return _counter(spec, GCounter(), {"inc": ("inc_delta", oracle.gcounter_inc, 1)})
    if name == "pncounter":
        no_params()
        return _counter(spec, PNCounter(), {
            "inc": ("inc_delta", oracle.pncounter_inc, 2),
            "dec": ("dec_delta", oracle.pncounter_dec, 1),
        })
    if name == "lexcounter":
        no_params()
        return _counter(spec, LexCounter(), {
            "inc": ("inc_delta", oracle.lexcounter_inc, 2),
            "dec": ("dec_delta", oracle.lexcounter_dec, 1),
        })
    if name == "gset":
        kind = one_kind()
        return _set_type(spec, GSet(), kind, {"insert": ("insert_delta", oracle.gset_insert, 1)},
                         lambda x: _sorted_list(x.elements()))
    if name == "twopset":
        kind = one_kind()
        return _set_type(spec, TwoPSet(), kind, {
            "insert": ("insert_delta", oracle.twopset_insert, 3),
            "remove": ("remove_delta", oracle.twopset_remove, 1),
        }, lambda x: _sorted_list(x.elements()))
    if name == "awlwwset":
        kind = one_kind()
        return _set_type(spec, AWLWWSet(), kind, {
            "insert": ("insert_delta", oracle.awlww_insert, 3, "t"),
            "remove": ("remove_delta", oracle.awlww_remove, 2, "t"),
        }, lambda x: _sorted_list(x.elements()))
    if name == "ewflag":
        no_params()
        return _set_type(spec, EWFlag(), None, {
            "enable": ("enable_delta", oracle.ewflag_enable, 1),
            "disable": ("disable_delta", oracle.ewflag_disable, 1),
        }, lambda x: x.read())
    if name == "mvregister":
        return _mvregister(spec, one_kind())
    if name == "awset":
        kind = one_kind()
        return _set_type(spec, AWSet(), kind, {
            "add": ("add_delta", oracle.awset_add, 4),
            "remove": ("remove_delta", oracle.awset_remove, 2),
        }, lambda x: _sorted_list(x.elements()), clear=oracle.awset_clear)
    if name == "rwset":
        kind = one_kind()
        return _set_type(spec, RWSet(), kind, {
            "add": ("add_delta", oracle.rwset_add, 4),
            "remove": ("remove_delta", oracle.rwset_remove, 2),
        }, lambda x: _sorted_list(x.elements()), clear=oracle.rwset_clear)
    if name == "ormap":
        if len(args) == 1:
            return _ormap(spec, str, _build(args[0]))
        if len(args) == 2:
            return _ormap(spec, _element_kind(args[0]), _build(args[1]))
        raise SpecError("ormap takes (value) or (key, value) type parameters")
    raise SpecError(f"unknown datatype {name!r}")


def parse(text: str) -> DataType:
    """Build a :class:`DataType` from a spec such as ``ormap(str, awset(int))``."""
    tokens = _tokenize(text)
    if not tokens:
        raise SpecError("empty datatype spec")
    term, pos = _parse_term(tokens, 0)
    if pos != len(tokens):
        raise SpecError(f"trailing input in datatype spec {text!r}")
    return _build(term)


PORTFOLIO = (
    "gcounter",
    "pncounter",
    "lexcounter",
    "gset(int)",
    "twopset(int)",
    "awlwwset(int)",
    "ewflag",
    "mvregister(str)",
    "awset(str)",
    "rwset(str)",
    "ormap(str, awset(int))",
)

CAUSAL_PORTFOLIO = tuple(s for s in PORTFOLIO if parse(s).is_causal)
