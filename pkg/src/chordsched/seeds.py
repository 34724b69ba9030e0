"""Named, platform-independent random substreams derived from one seed."""

import hashlib
import random


def derive_seed(*parts):
    """64-bit seed from an arbitrary tuple of str/int parts."""
    text = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "big")


def substream(seed, name, *extra):
    return random.Random(derive_seed(seed, name, *extra))
