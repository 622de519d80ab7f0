"""Delta-state CRDTs with anti-entropy engines and a seeded network simulator."""

from .causal import (
    Causal,
    CausalContext,
    Dot,
    DotFun,
    DotMap,
    DotSet,
)
from .causal_types import AWSet, EWFlag, MVRegister, ORMap, RWSet
from .codec import decode, digest, encode, encoded_size
from .kernels import IMPLEMENTATION as KERNELS
from .lattice import Lattice, LexPair, MaxInt, OrBool, Pair, join, join_all, leq, mutate
from .primitives import AWLWWSet, GCounter, GSet, LexCounter, MonotonicClock, PNCounter, TwoPSet
from .protocol import (
    Ack,
    AlwaysDelta,
    AlwaysState,
    BasicNode,
    BasicPayload,
    CausalNode,
    Delta,
    FileStore,
    MemoryStore,
    SizeThreshold,
)

__version__ = "0.1.0"

__all__ = [
    "AWLWWSet",
    "AWSet",
    "Ack",
    "AlwaysDelta",
    "AlwaysState",
    "BasicNode",
    "BasicPayload",
    "Causal",
    "CausalContext",
    "CausalNode",
    "Delta",
    "Dot",
    "DotFun",
    "DotMap",
    "DotSet",
    "EWFlag",
    "FileStore",
    "GCounter",
    "GSet",
    "KERNELS",
    "Lattice",
    "LexCounter",
    "LexPair",
    "MVRegister",
    "MaxInt",
    "MemoryStore",
    "MonotonicClock",
    "ORMap",
    "OrBool",
    "PNCounter",
    "Pair",
    "RWSet",
    "SizeThreshold",
    "TwoPSet",
    "decode",
    "digest",
    "encode",
    "encoded_size",
    "join",
    "join_all",
    "leq",
    "mutate",
]
