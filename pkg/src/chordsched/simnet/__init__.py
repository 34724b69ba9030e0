"""Deterministic discrete-event harness: clock, transport, churn, workloads."""

from .churn import ChurnPattern, Phase, generate_lifecycle
from .clock import VirtualClock
from .transport import LatencyModel, Network, ProcessingModel, TrafficLog, message_size
from .workload import WorkloadSpec

__all__ = [
    "ChurnPattern", "Phase", "generate_lifecycle", "VirtualClock", "LatencyModel",
    "Network", "ProcessingModel", "TrafficLog", "message_size", "WorkloadSpec",
]
