"""Identifier arithmetic on the 2**m Chord ring.

Identifiers are plain ``int`` values in ``[0, 2**m)``.  Keys are hashed
with 64-bit FNV-1a; for ``m < 64`` the top ``m`` bits are kept.
"""

from . import kernels
from .errors import InvalidArgument

DEFAULT_BITS = 64
MAX_BITS = 64


class Ring:
    """Arithmetic helpers bound to one ring width ``m``."""

    __slots__ = ("m", "size", "mask")

    def __init__(self, m=DEFAULT_BITS):
        if not 1 <= m <= MAX_BITS:
            raise InvalidArgument(f"ring width must be in [1, {MAX_BITS}], got {m}")
        self.m = m
        self.size = 1 << m
        self.mask = self.size - 1

    def __repr__(self):
        return f"Ring(m={self.m})"

    def check(self, value):
        if not 0 <= value < self.size:
            raise InvalidArgument(f"identifier {value} outside [0, 2**{self.m})")
        return value

    def id_from_key(self, key_bytes):
        if not key_bytes:
            raise InvalidArgument("key must be a non-empty byte sequence")
        h = kernels.fnv1a64(bytes(key_bytes))
        return h >> (64 - self.m)

    def in_half_open(self, x, a, b):
        """True iff x lies in (a, b] walking clockwise; a == b means the whole ring."""
        return kernels.in_half_open(x, a, b, self.mask)

    def in_open(self, x, a, b):
        """True iff x lies in (a, b); a == b means every identifier except a."""
        return kernels.in_open(x, a, b, self.mask)

    def distance(self, a, b):
        """Clockwise distance from a to b."""
        return (b - a) & self.mask

    def finger_target(self, n, i):
        if not 1 <= i <= self.m:
            raise InvalidArgument(f"finger index must be in [1, {self.m}], got {i}")
        return (n + (1 << (i - 1))) & self.mask


_default = Ring()


def id_from_key(key_bytes, m=DEFAULT_BITS):
    return (_default if m == DEFAULT_BITS else Ring(m)).id_from_key(key_bytes)


def in_half_open(x, a, b, m=DEFAULT_BITS):
    return (_default if m == DEFAULT_BITS else Ring(m)).in_half_open(x, a, b)


def finger_target(n, i, m=DEFAULT_BITS):
    return (_default if m == DEFAULT_BITS else Ring(m)).finger_target(n, i)
