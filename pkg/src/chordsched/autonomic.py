"""Per-node autonomic manager for maintenance scheduling.

Each cycle the manager counts the node's wasted-maintenance and
access-error events, asks two opposing sub-policies for a new maintenance
interval, applies the arithmetic mean of the two (clamped), and requests an
immediate maintenance run whenever an error was seen.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import InvalidArgument

NULL_POLICY = "null_policy"
AUTONOMIC = "autonomic"


class EventKind(str, Enum):
    WASTED_MAINTENANCE = "wasted_maintenance"
    ACCESS_ERROR = "access_error"


@dataclass(frozen=True)
class PolicyConfig:
    mode: str = AUTONOMIC
    k_wmc: float = 1.0
    k_ec: float = 1.0
    cycle_duration: float = 2.0
    initial_interval: float = 2.0
    interval_min: float = 0.25
    interval_max: float = 600.0

    def __post_init__(self):
        if self.mode not in (NULL_POLICY, AUTONOMIC):
            raise InvalidArgument(f"unknown policy mode {self.mode!r}")
        if not (self.k_wmc > 0 and self.k_ec > 0):
            raise InvalidArgument("dampening factors must be positive")
        if self.cycle_duration <= 0:
            raise InvalidArgument("cycle_duration must be positive")
        if not 0 < self.interval_min <= self.initial_interval <= self.interval_max:
            raise InvalidArgument("need 0 < interval_min <= initial_interval <= interval_max")


# Named policies: 0 = fixed interval, 1 = relaxed, 2 = aggressive.
POLICIES = {
    "policy0": PolicyConfig(mode=NULL_POLICY),
    "policy1": PolicyConfig(k_wmc=8.0, k_ec=32.0),
    "policy2": PolicyConfig(k_wmc=1.0, k_ec=1.0),
}


@dataclass(frozen=True)
class CycleMetrics:
    wmc: int = 0
    ec: int = 0


@dataclass(frozen=True)
class CycleDecision:
    new_interval: float
    immediate_maintenance: bool


def change_proportion(metric_value, k):
    """Proportion of change P = 1 - 1/(metric/k + 1), in [0, 1)."""
    if k <= 0:
        raise InvalidArgument(f"dampening factor must be positive, got {k}")
    if metric_value < 0:
        raise InvalidArgument(f"metric must be non-negative, got {metric_value}")
    return 1.0 - 1.0 / (metric_value / k + 1.0)


def recommend_interval_wmc(current, wmc, k_wmc):
    if current <= 0:
        raise InvalidArgument("current interval must be positive")
    return current * (1.0 + change_proportion(wmc, k_wmc))


def recommend_interval_ec(current, ec, k_ec):
    if current <= 0:
        raise InvalidArgument("current interval must be positive")
    return current * (1.0 - change_proportion(ec, k_ec))


def evaluate_cycle(current, metrics, cfg):
    if cfg.mode == NULL_POLICY:
        return CycleDecision(current, False)
    lengthen = recommend_interval_wmc(current, metrics.wmc, cfg.k_wmc)
    shorten = recommend_interval_ec(current, metrics.ec, cfg.k_ec)
    mean = (lengthen + shorten) / 2.0
    new = min(max(mean, cfg.interval_min), cfg.interval_max)
    return CycleDecision(new, metrics.ec > 0)


@dataclass(frozen=True)
class CycleRecord:
    """One manager.csv row."""

    time: float
    node: int
    wmc: int
    ec: int
    interval_before: float
    interval_after: float
    immediate: bool


class AutonomicManager:
    """Manager attached to one node incarnation.

    Events are buffered locally (no network traffic).  ``run_cycle`` is
    invoked by the simulator every ``cfg.cycle_duration`` seconds.
    """

    def __init__(self, node, cfg):
        self.node = node
        self.cfg = cfg
        self.buffer = []
        self.cycles = 0

    def record(self, event):
        self.buffer.append(event)

    def drain(self):
        wmc = ec = 0
        for event in self.buffer:
            if event.kind is EventKind.WASTED_MAINTENANCE:
                wmc += 1
            else:
                ec += 1
        self.buffer.clear()
        return CycleMetrics(wmc, ec)

    def run_cycle(self, now):
        metrics = self.drain()
        before = self.node.maintenance_interval
        decision = evaluate_cycle(before, metrics, self.cfg)
        if decision.new_interval != before:
            self.node.set_maintenance_interval(decision.new_interval)
        if decision.immediate_maintenance:
            self.node.request_immediate_maintenance()
        self.cycles += 1
        return CycleRecord(
            now, self.node.id, metrics.wmc, metrics.ec, before, decision.new_interval,
            decision.immediate_maintenance,
        )
