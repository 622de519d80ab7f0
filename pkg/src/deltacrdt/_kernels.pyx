# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled versions of the hot join kernels (see ``_pykernels``)."""

IMPLEMENTATION = "cython"

cdef object _MISSING = object()


cpdef dict max_merge(dict a, dict b):
    cdef dict out = None
    cdef object k, v, cur
    if not b:
        return a
    if not a:
        return b
    for k, v in b.items():
        cur = a.get(k, None)
        if cur is None or v > cur:
            if out is None:
                out = a.copy()
            out[k] = v
    return a if out is None else out


cdef inline bint _seen(dict vector, frozenset cloud, object dot):
    cdef object top = vector.get(dot[0], 0)
    return dot[1] <= top or dot in cloud


cpdef tuple compact(dict vector, frozenset cloud):
    cdef dict by_replica, vec
    cdef list dots, keep
    cdef object dot
    cdef object r
    cdef long long top, start, n
    cdef Py_ssize_t i, size
    cdef bint changed = False
    if not cloud:
        return vector, cloud
    by_replica = {}
    for dot in cloud:
        r = dot[0]
        dots = by_replica.get(r)
        if dots is None:
            by_replica[r] = [dot]
        else:
            dots.append(dot)
    vec = vector
    keep = []
    for r, dots in by_replica.items():
        dots.sort(key=_counter)
        top = vector.get(r, 0)
        start = top
        size = len(dots)
        for i in range(size):
            dot = dots[i]
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
                vec = vector.copy()
            vec[r] = top
    if not changed:
        return vector, cloud
    return vec, frozenset(keep)


def _counter(dot):
    return dot[1]


cpdef bint ctx_contains(dict vector, frozenset cloud, object dot):
    return _seen(vector, cloud, dot)


cpdef tuple ctx_union(dict v1, frozenset c1, dict v2, frozenset c2):
    cdef dict vec = max_merge(v1, v2)
    cdef frozenset cloud
    if not c1 and not c2:
        return vec, c1
    if c1 and c2:
        cloud = c1 | c2
    elif c1:
        cloud = c1
    else:
        cloud = c2
    return compact(vec, cloud)


cpdef frozenset dotset_join(frozenset s1, dict v1, frozenset c1,
                            frozenset s2, dict v2, frozenset c2):
    cdef list out = []
    cdef object d
    if s1 is s2:
        return s1
    for d in s1:
        if d in s2 or not _seen(v2, c2, d):
            out.append(d)
    for d in s2:
        if d not in s1 and not _seen(v1, c1, d):
            out.append(d)
    return frozenset(out)


cpdef dict dotfun_join(dict m1, dict v1, frozenset c1,
                       dict m2, dict v2, frozenset c2, object value_join):
    cdef dict out = {}
    cdef object d
    cdef object x, y
    for d, x in m1.items():
        y = m2.get(d, _MISSING)
        if y is not _MISSING:
            out[d] = x if x is y else value_join(x, y)
        elif not _seen(v2, c2, d):
            out[d] = x
    for d, y in m2.items():
        if d not in m1 and not _seen(v1, c1, d):
            out[d] = y
    return out
