"""Evaluation metrics: expected lookup time, network usage, normalization, NSD.

Expected lookup time (ELT) assumes a caller that retries until success::

    ELT = t_lookup + sum_{i>=1} i * t_error * p**i
        = t_lookup + t_error * p / (1 - p)**2

Network usage (NU) is the mean outgoing data rate per node in bytes/s.
Lookups are assigned to windows by their start time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import InvalidArgument

DEFAULT_WINDOW = 300.0


class LookupRecord(NamedTuple):
    start: float
    end: float
    success: bool
    key: int = 0
    error_kind: str = ""

    @property
    def duration(self):
        return self.end - self.start


@dataclass(frozen=True)
class WindowMetrics:
    window_index: int
    elt: Optional[float]
    nu: float


def expected_lookup_time(t_lookup, t_error, p_error):
    if not 0.0 <= p_error <= 1.0:
        raise InvalidArgument(f"error probability must be in [0, 1], got {p_error}")
    if t_lookup < 0 or t_error < 0:
        raise InvalidArgument("times must be non-negative")
    if p_error == 0.0:
        return float(t_lookup)
    if p_error == 1.0:
        return math.inf
    return t_lookup + t_error * p_error / (1.0 - p_error) ** 2


def _elt_from(durations_ok, durations_err, direct=False):
    if not durations_ok:
        return None
    t_lookup = sum(durations_ok) / len(durations_ok)
    if direct:
        return t_lookup
    n_err = len(durations_err)
    t_error = sum(durations_err) / n_err if n_err else 0.0
    p = n_err / (n_err + len(durations_ok))
    return expected_lookup_time(t_lookup, t_error, p)


def _traffic_columns(traffic):
    """(times, bytes) numpy arrays from a TrafficLog or an iterable of (time, node, bytes)."""
    if hasattr(traffic, "times") and hasattr(traffic, "sizes"):
        return np.frombuffer(traffic.times, dtype=np.float64), np.frombuffer(traffic.sizes, dtype=np.int64)
    rows = list(traffic)
    if not rows:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    arr = np.asarray([(r[0], r[2]) for r in rows], dtype=np.float64)
    return arr[:, 0], arr[:, 1].astype(np.int64)


def window_metrics(lookups, traffic, window=DEFAULT_WINDOW, node_count=16, duration=None, direct=False):
    """Per-window ELT and NU.

    ``duration`` fixes the number of windows (the last one may be partial and
    its rate uses the covered length); by default the span of the logs is used.
    With ``direct`` (runs whose client retried failures) ELT is the mean
    measured duration instead of the derived formula.
    """
    times, sizes = _traffic_columns(traffic)
    if duration is None:
        last = max([r.start for r in lookups] + ([float(times.max())] if len(times) else [0.0]))
        duration = (math.floor(last / window) + 1) * window
    count = max(1, math.ceil(duration / window))

    idx = np.minimum((times // window).astype(np.int64), count - 1) if len(times) else np.zeros(0, np.int64)
    byte_sums = np.bincount(idx, weights=sizes, minlength=count)[:count] if len(times) else np.zeros(count)

    ok = [[] for _ in range(count)]
    err = [[] for _ in range(count)]
    for r in lookups:
        w = min(int(r.start // window), count - 1)
        (ok if r.success else err)[w].append(r.end - r.start)

    out = []
    for w in range(count):
        length = min(window, duration - w * window) if w == count - 1 else window
        nu = float(byte_sums[w]) / (length * node_count) if length > 0 else 0.0
        out.append(WindowMetrics(w, _elt_from(ok[w], err[w], direct), nu))
    return out


def single_value_metrics(lookups, traffic, node_count, duration, direct=False):
    """Whole-run (ELT, NU); ELT is None when no lookup succeeded."""
    if duration <= 0:
        raise InvalidArgument("duration must be positive")
    ok = [r.end - r.start for r in lookups if r.success]
    err = [r.end - r.start for r in lookups if not r.success]
    _, sizes = _traffic_columns(traffic)
    nu = float(sizes.sum()) / (duration * node_count)
    return _elt_from(ok, err, direct), nu


def normalize(managed, unmanaged):
    """managed / unmanaged, or None when either side is missing or the baseline is zero."""
    if managed is None or unmanaged is None or unmanaged == 0:
        return None
    return managed / unmanaged


def normalize_windows(managed, unmanaged):
    """Mean of per-window ratios over windows where both values are defined."""
    ratios = [normalize(m, u) for m, u in zip(managed, unmanaged)]
    ratios = [r for r in ratios if r is not None and math.isfinite(r)]
    if not ratios:
        return None
    return sum(ratios) / len(ratios)


def nsd(values):
    """Population standard deviation of three repeat values divided by their mean."""
    values = list(values)
    if len(values) != 3:
        raise InvalidArgument(f"nsd needs exactly 3 values, got {len(values)}")
    mean = sum(values) / 3.0
    if mean == 0:
        return None
    var = sum((v - mean) ** 2 for v in values) / 3.0
    return math.sqrt(var) / abs(mean)


def mean_defined(values):
    vals = [v for v in values if v is not None and math.isfinite(v)]
    return sum(vals) / len(vals) if vals else None
