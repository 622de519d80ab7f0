"""Pure-Python versions of the hot join kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and the same results. Contexts are passed unpacked as ``(vector, cloud)``
where ``vector`` maps replica -> contiguous maximum and ``cloud`` is a
frozenset of ``(replica, n)`` tuples.
"""

from __future__ import annotations

IMPLEMENTATION = "python"


def max_merge(a, b):
    """Pointwise maximum of two ``key -> int`` maps.

    Returns ``a`` itself when ``b`` adds nothing, so callers can detect a
    no-op join by identity.
    """
    if not b:
        return a
    if not a:
        return b
    out = None
    for k, v in b.items():
        cur = a.get(k)
        if cur is None or v > cur:
            if out is None:
                out = dict(a)
            out[k] = v
    return a if out is None else out


def compact(vector, cloud):
    """Absorb cloud dots that extend the contiguous prefix into the vector."""
    if not cloud:
        return vector, cloud
    by_replica = {}
    for dot in cloud:
        by_replica.setdefault(dot[0], []).append(dot)
    vec = vector
    keep = []
    changed = False
    for r, dots in by_replica.items():
        dots.sort(key=_counter)
        top = vector.get(r, 0)
        start = top
        for i, dot in enumerate(dots):
            n = dot[1]
            if n <= top:
                changed = True
            elif n == top + 1:
                top = n
                changed = True
            else:
                keep.extend(dots[i:])
                break
        if top != start:
            if vec is vector:
                vec = dict(vector)
            vec[r] = top
    if not changed:
        return vector, cloud
    return vec, frozenset(keep)


def _counter(dot):
    return dot[1]


def ctx_contains(vector, cloud, dot):
    return dot[1] <= vector.get(dot[0], 0) or dot in cloud


def ctx_union(v1, c1, v2, c2):
    vec = max_merge(v1, v2)
    if not c1 and not c2:
        return vec, c1
    cloud = c1 | c2 if c1 and c2 else (c1 or c2)
    return compact(vec, cloud)


def dotset_join(s1, v1, c1, s2, v2, c2):
    """Store part of the causal join of two dot sets."""
    if s1 is s2:
        return s1
    out = []
    for d in s1:
        if d in s2 or not (d[1] <= v2.get(d[0], 0) or d in c2):
            out.append(d)
    for d in s2:
        if d not in s1 and not (d[1] <= v1.get(d[0], 0) or d in c1):
            out.append(d)
    return frozenset(out)


def dotfun_join(m1, v1, c1, m2, v2, c2, value_join):
    """Store part of the causal join of two dot functions."""
    out = {}
    for d, x in m1.items():
        y = m2.get(d, _MISSING)
        if y is not _MISSING:
            out[d] = x if x is y else value_join(x, y)
        elif not (d[1] <= v2.get(d[0], 0) or d in c2):
            out[d] = x
    for d, y in m2.items():
        if d not in m1 and not (d[1] <= v1.get(d[0], 0) or d in c1):
            out[d] = y
    return out


_MISSING = object()
