"""Pure-Python ring and routing kernels.

Reference implementation for the compiled ``_ckernels`` module; both must
return identical results for identifiers below 2**64.
"""

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data):
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def in_half_open(x, a, b, mask):
    span = (b - a) & mask
    if span == 0:
        return True
    d = (x - a) & mask
    return 0 < d <= span


def in_open(x, a, b, mask):
    span = (b - a) & mask
    d = (x - a) & mask
    if span == 0:
        return d != 0
    return 0 < d < span


def closest_preceding(self_id, key, ids, mask):
    """Index into ``ids`` of the entry furthest clockwise in (self_id, key), or -1."""
    limit = (key - self_id) & mask
    best = -1
    best_d = 0
    for i, c in enumerate(ids):
        d = (c - self_id) & mask
        if d == 0:
            continue
        if limit != 0 and d >= limit:
            continue
        if d > best_d:
            best_d = d
            best = i
    return best


def next_unresolved_finger(self_id, start, resolved_id, m):
    """First finger index >= start whose target lies outside (self_id, resolved_id].

    Returns m + 1 when every remaining finger is covered by ``resolved_id``.
    """
    mask = (1 << m) - 1
    span = (resolved_id - self_id) & mask
    if span == 0:
        return m + 1
    i = start
    while i <= m:
        d = 1 << (i - 1)  # distance of the finger target from self
        if d > span:
            return i
        i += 1
    return m + 1
