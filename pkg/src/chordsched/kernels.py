"""Selects the ring/routing kernel implementation at import time.

The compiled extension is used when it was built and importable; setting
``CHORDSCHED_PURE_PYTHON=1`` forces the pure-Python fallback.  Both
implementations handle identifiers of at most 64 bits.
"""

import os

from . import _pykernels

python_kernels = _pykernels

try:
    if os.environ.get("CHORDSCHED_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as _impl

    compiled_kernels = _impl
except ImportError:
    _impl = _pykernels
    compiled_kernels = None

BACKEND = "cython" if _impl is not _pykernels else "python"

fnv1a64 = _impl.fnv1a64
in_half_open = _impl.in_half_open
in_open = _impl.in_open
closest_preceding = _impl.closest_preceding
next_unresolved_finger = _impl.next_unresolved_finger
