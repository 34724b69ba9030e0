"""On-line/off-line lifecycle generation for churn patterns.

Phase durations are drawn from normal distributions truncated below at
one second.  Each node uses its own random substreams, so a node's
lifecycle depends only on (pattern, node index, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..seeds import substream

LOW = "low"
HIGH = "high"
LOCAL = "local"
TEMPORAL = "temporal"
KINDS = (LOW, HIGH, LOCAL, TEMPORAL)

MIN_PHASE = 1.0


@dataclass(frozen=True)
class PhaseParams:
    on_mu: float
    on_sigma: float
    off_mu: float
    off_sigma: float


LOW_PARAMS = PhaseParams(10000.0, 0.0, 160.0, 20.0)
HIGH_PARAMS = PhaseParams(200.0, 40.0, 100.0, 20.0)


@dataclass(frozen=True)
class ChurnPattern:
    kind: str
    low: PhaseParams = LOW_PARAMS
    high: PhaseParams = HIGH_PARAMS
    local_low_fraction: float = 0.25
    temporal_phase: float = 1000.0
    start_online_probability: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown churn pattern {self.kind!r}")
        if not 0 <= self.local_low_fraction <= 1:
            raise ValueError("local_low_fraction must be in [0, 1]")
        if self.temporal_phase <= 0:
            raise ValueError("temporal_phase must be positive")

    def low_churn_nodes(self, node_count):
        """Number of nodes (lowest indices) that follow the low pattern in the local mix."""
        return math.ceil(self.local_low_fraction * node_count)

    def node_class(self, node_index, node_count):
        if self.kind == LOCAL:
            return LOW if node_index < self.low_churn_nodes(node_count) else HIGH
        return self.kind

    def params_at(self, node_index, node_count, t):
        if self.kind == TEMPORAL:
            return self.low if int(t // self.temporal_phase) % 2 == 0 else self.high
        return self.low if self.node_class(node_index, node_count) == LOW else self.high


@dataclass(frozen=True)
class Phase:
    start: float
    end: float
    online: bool

    @property
    def duration(self):
        return self.end - self.start


def sample_duration(rng, mu, sigma):
    return max(MIN_PHASE, rng.gauss(mu, sigma) if sigma > 0 else mu)


def generate_lifecycle(pattern, node_index, seed, horizon, node_count=16):
    """Alternating on/off phases covering [0, horizon].

    For the temporal pattern the distribution switches at every multiple of
    ``temporal_phase``; a phase in progress at a switch keeps its state, and
    its remaining length is redrawn from the new distribution.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    start_rng = substream(seed, "start-phase", node_index)
    rng = substream(seed, "churn", node_index)
    online = start_rng.random() < pattern.start_online_probability

    phases = []
    t = 0.0
    while t < horizon:
        params = pattern.params_at(node_index, node_count, t)
        if online:
            end = t + sample_duration(rng, params.on_mu, params.on_sigma)
        else:
            end = t + sample_duration(rng, params.off_mu, params.off_sigma)
        if pattern.kind == TEMPORAL:
            boundary = (math.floor(t / pattern.temporal_phase) + 1) * pattern.temporal_phase
            while end > boundary and boundary < horizon:
                params = pattern.params_at(node_index, node_count, boundary)
                if online:
                    end = boundary + sample_duration(rng, params.on_mu, params.on_sigma)
                else:
                    end = boundary + sample_duration(rng, params.off_mu, params.off_sigma)
                boundary += pattern.temporal_phase
        end = min(end, horizon)
        phases.append(Phase(t, end, online))
        t = end
        online = not online
    return phases
