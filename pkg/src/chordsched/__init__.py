"""Chord with autonomically managed maintenance scheduling."""

from .autonomic import (
    AutonomicManager, CycleDecision, CycleMetrics, PolicyConfig, POLICIES,
    change_proportion, evaluate_cycle, recommend_interval_ec, recommend_interval_wmc,
)
from .chord import ChordNode, MaintenanceReport, ManagerEvent, PeerRef
from .errors import ConfigError, InvalidArgument, JoinFailed, LookupFailed
from .kernels import BACKEND as KERNEL_BACKEND
from .ring import Ring, finger_target, id_from_key, in_half_open

__version__ = "0.1.0"
