# cython: language_level=3
"""Compiled ring and routing kernels (identifiers up to 64 bits)."""

ctypedef unsigned long long u64

cdef u64 FNV_OFFSET = 0xCBF29CE484222325ULL
cdef u64 FNV_PRIME = 0x100000001B3ULL


def fnv1a64(const unsigned char[:] data):
    cdef u64 h = FNV_OFFSET
    cdef Py_ssize_t i
    for i in range(data.shape[0]):
        h ^= data[i]
        h *= FNV_PRIME
    return h


def in_half_open(u64 x, u64 a, u64 b, u64 mask):
    cdef u64 span = (b - a) & mask
    if span == 0:
        return True
    cdef u64 d = (x - a) & mask
    return 0 < d <= span


def in_open(u64 x, u64 a, u64 b, u64 mask):
    cdef u64 span = (b - a) & mask
    cdef u64 d = (x - a) & mask
    if span == 0:
        return d != 0
    return 0 < d < span


def closest_preceding(u64 self_id, u64 key, ids, u64 mask):
    cdef u64 limit = (key - self_id) & mask
    cdef u64 best_d = 0
    cdef u64 d, c
    cdef Py_ssize_t best = -1
    cdef Py_ssize_t i = 0
    for obj in ids:
        c = obj
        d = (c - self_id) & mask
        if d != 0 and (limit == 0 or d < limit) and d > best_d:
            best_d = d
            best = i
        i += 1
    return best


def next_unresolved_finger(u64 self_id, int start, u64 resolved_id, int m):
    cdef u64 mask = ((<u64>1) << m) - 1 if m < 64 else <u64>0xFFFFFFFFFFFFFFFFULL
    cdef u64 span = (resolved_id - self_id) & mask
    if span == 0:
        return m + 1
    cdef int i = start
    while i <= m:
        if ((<u64>1) << (i - 1)) > span:
            return i
        i += 1
    return m + 1
