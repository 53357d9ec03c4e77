# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: STN edge insertion and relaxed reachability."""

BACKEND = "cython"


def stn_close(long long[:, ::1] D, Py_ssize_t n, Py_ssize_t j, Py_ssize_t i,
              long long w, long long inf):
    cdef Py_ssize_t a, b
    cdef long long back = D[i, j]
    cdef long long daj, base, dib, c
    if back < inf and back + w < 0:
        return False
    if not w < D[j, i]:
        return True
    for a in range(n):
        daj = D[a, j]
        if daj >= inf:
            continue
        base = daj + w
        for b in range(n):
            dib = D[i, b]
            if dib >= inf:
                continue
            c = base + dib
            if c < D[a, b]:
                D[a, b] = c
    return True


def relaxed_fixpoint(int[::1] pre_ptr, int[::1] pre_idx, int[::1] add_ptr,
                     int[::1] add_idx, long long[::1] cost, int[::1] sup,
                     long long inf):
    cdef Py_ssize_t n_events = pre_ptr.shape[0] - 1
    cdef Py_ssize_t e, k
    cdef long long total, v
    cdef int f
    cdef bint changed = True
    cdef bint blocked
    while changed:
        changed = False
        for e in range(n_events):
            total = 1
            blocked = False
            for k in range(pre_ptr[e], pre_ptr[e + 1]):
                v = cost[pre_idx[k]]
                if v >= inf:
                    blocked = True
                    break
                total += v
            if blocked:
                continue
            for k in range(add_ptr[e], add_ptr[e + 1]):
                f = add_idx[k]
                if total < cost[f]:
                    cost[f] = total
                    sup[f] = <int>e
                    changed = True
