"""Random reachable states for property tests and benchmarks.

Arbitrary lattice values are not enough for causal types: a store must only
hold dots its context has seen, and one dot must carry one payload
everywhere. So states are grown by replaying random histories: replicas apply
random ops and merge each other's states and deltas.
"""

from __future__ import annotations

import random
from typing import Iterator

from .datatypes import DataType
from .lattice import Lattice


def random_history(
    dt: DataType,
    rng: random.Random,
    *,
    replicas: int = 3,
    steps: int = 12,
    merge_prob: float = 0.3,
) -> list[Lattice]:
    """Run a short random history and return every state and delta it produced."""
    ids = [f"r{n}" for n in range(replicas)]
    states = [dt.bottom] * replicas
    pool: list[Lattice] = [dt.bottom]
    for t in range(1, steps + 1):
        k = rng.randrange(replicas)
        if rng.random() < merge_prob:
            other = rng.choice(pool)
            states[k] = states[k].join(other)
        else:
            name, args = dt.random_op(rng, t)
            d = dt.delta_mutator(name, ids[k], args)(states[k])
            states[k] = states[k].join(d)
            pool.append(d)
        pool.append(states[k])
    return pool


def random_states(dt: DataType, rng: random.Random, n: int, **kw) -> list[Lattice]:
    """``n`` reachable values of ``dt``, each from an independent history."""
    out = []
    for _ in range(n):
        pool = random_history(dt, rng, **kw)
        out.append(rng.choice(pool))
    return out


def random_triples(dt: DataType, rng: random.Random, n: int, **kw) -> Iterator[tuple[Lattice, Lattice, Lattice]]:
    """Triples drawn from one shared history, so their joins are meaningful."""
    for _ in range(n):
        pool = random_history(dt, rng, **kw)
        yield rng.choice(pool), rng.choice(pool), rng.choice(pool)

