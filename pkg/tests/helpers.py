"""Hypothesis strategies and small builders shared by the test modules."""

from hypothesis import strategies as st

from deltacrdt import datatypes, workload
from deltacrdt.causal import CausalContext, Dot

PORTFOLIO = {spec: datatypes.parse(spec) for spec in datatypes.PORTFOLIO}

replica_ids = st.sampled_from(["a", "b", "c", "d"])
dots = st.builds(Dot, replica_ids, st.integers(1, 12))
dot_sets = st.frozensets(dots, max_size=25)


def contexts():
    return dot_sets.map(CausalContext.from_dots)


def histories(dt, **kw):
    """A pool of states and deltas from one random history of ``dt``."""
    return st.randoms(use_true_random=False).map(lambda rng: workload.random_history(dt, rng, **kw))


def reachable(dt, **kw):
    return st.randoms(use_true_random=False).map(lambda rng: workload.random_states(dt, rng, 1, **kw)[0])


def triples(dt, **kw):
    return st.randoms(use_true_random=False).map(
        lambda rng: next(workload.random_triples(dt, rng, 1, **kw))
    )


def ctx(*ds):
    return CausalContext.from_dots(Dot(*d) for d in ds)
