"""Run one experiment: N managed Chord nodes under churn, driven by a workload.

Everything is driven from a single :class:`VirtualClock`; all randomness
comes from named substreams of the experiment seed, so a configuration
always produces the same logs.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

from .. import wire
from ..autonomic import AutonomicManager, CycleRecord
from ..chord import ChordNode, PeerRef
from ..errors import LookupFailed
from ..metrics import LookupRecord
from ..ring import Ring
from ..seeds import substream
from ..wire import Message, message_size
from .churn import ChurnPattern, generate_lifecycle
from .clock import VirtualClock
from .transport import LatencyModel, Network, ProcessingModel
from .workload import WorkloadSpec, plan

DEFAULT_NODE_COUNT = 16


@dataclass(frozen=True)
class SimParams:
    ring_bits: int = 64
    successor_list: int = 4
    latency: LatencyModel = field(default_factory=LatencyModel)
    processing: ProcessingModel = field(default_factory=ProcessingModel)
    warmup: float = 60.0
    window: float = 300.0
    max_attempts: int = 50
    entry_retry_delay: float = 1.0


def node_address(index):
    return f"node-{index}"


def node_ref(ring, index):
    address = node_address(index)
    return PeerRef(ring.id_from_key(address.encode()), address)


class Host:
    """Lifecycle and scheduling runtime for one node slot."""

    def __init__(self, sim, index, ref, phases, churn_class):
        self.sim = sim
        self.index = index
        self.ref = ref
        self.phases = phases
        self.churn_class = churn_class
        self.endpoint = sim.net.endpoint(ref.address)
        self.node = None
        self.manager = None
        self.incarnations = 0
        self._timer = 0
        self.pending = []

    # -- lifecycle ---------------------------------------------------------

    def go_online(self, phase):
        sim = self.sim
        node = ChordNode(self.ref, sim.ring, sim.clock, sim.params.successor_list,
                         initial_interval=sim.policy.initial_interval)
        node.runtime = self
        node.bootstrap_candidates = sim.candidates[self.index]
        manager = AutonomicManager(node, sim.policy)
        node.on_event = manager.record
        self.node = node
        self.manager = manager
        self.incarnations += 1
        ep = self.endpoint
        ep.node = node
        ep.busy_until = sim.clock.now
        ep.offline_at = phase.end if phase.end < sim.horizon else float("inf")
        sim.incarnations.append(node)

        if not sim.any_joined(exclude=self.index):
            node.create()
            self._joined(None)
        else:
            sim.net.spawn(node, node.join_any(node.bootstrap_candidates), on_done=self._joined)
        sim.clock.call_later(sim.policy.cycle_duration, self._cycle, node)

    def go_offline(self):
        node = self.node
        if node is None:
            return
        node.alive = False
        self.node = None
        self.manager = None
        self.endpoint.node = None
        self.endpoint.offline_at = float("inf")
        pending, self.pending = self.pending, []
        for request in pending:
            self.sim.executor.entry_lost(request)

    def _joined(self, _):
        node = self.node
        node.last_maintenance_end = self.sim.clock.now
        self.reschedule_maintenance(node)

    # -- manager and maintenance ------------------------------------------

    def _cycle(self, node):
        if node is not self.node:
            return
        sim = self.sim
        sim.cycles.append(self.manager.run_cycle(sim.clock.now))
        sim.clock.call_later(sim.policy.cycle_duration, self._cycle, node)

    def reschedule_maintenance(self, node):
        if node is not self.node or not node.joined or node.maintaining:
            return
        self._timer += 1
        clock = self.sim.clock
        at = max(clock.now, node.last_maintenance_end + node.maintenance_interval)
        clock.schedule(at, self._fire, node, self._timer)

    def _fire(self, node, token):
        if token == self._timer and node is self.node and not node.maintaining:
            self._start_maintenance(node)

    def immediate_maintenance(self, node):
        if node is self.node and node.joined and not node.maintaining:
            self._timer += 1
            self.sim.immediate_runs += 1
            self._start_maintenance(node)

    def _start_maintenance(self, node):
        node.maintaining = True
        sim = self.sim
        cost = sim.params.processing.maintenance_cost
        if cost:
            sim.net.occupy(self.endpoint, cost)
        sim.net.spawn(node, node.maintain(), on_done=lambda report: self._maintained(node, report))

    def _maintained(self, node, report):
        node.maintaining = False
        node.last_maintenance_end = self.sim.clock.now
        self.reschedule_maintenance(node)


@dataclass
class _ClientRequest:
    key: int
    start: float
    sent: float
    host: Host
    node: ChordNode
    done: object
    attempt: int = 1
    finished: bool = False


class WorkloadExecutor:
    """The external client: issues lookups through on-line nodes in rotation."""

    def __init__(self, sim, steps, retry_on_error):
        self.sim = sim
        self.steps = steps
        self.retry = retry_on_error
        self.records = []
        self.completed_at = None
        self._rr = 0

    def start(self):
        self._next()

    def _next(self):
        step = next(self.steps, None)
        clock = self.sim.clock
        if step is None:
            self.completed_at = clock.now
            return
        kind, arg = step
        if kind == "seq":
            self.issue(arg, clock.now, lambda rec: self._next())
        elif kind == "par":
            remaining = [len(arg)]

            def one_done(rec):
                remaining[0] -= 1
                if remaining[0] == 0:
                    self._next()

            for key in arg:
                self.issue(key, clock.now, one_done)
        else:
            clock.call_later(arg, self._next)

    def pick_entry(self):
        hosts = self.sim.hosts
        n = len(hosts)
        for k in range(n):
            host = hosts[(self._rr + k) % n]
            if host.node is not None and host.node.joined:
                self._rr = (self._rr + k + 1) % n
                return host
        return None

    def issue(self, key, start, done, attempt=1):
        sim = self.sim
        clock = sim.clock
        host = self.pick_entry()
        if host is None:
            clock.call_later(sim.params.entry_retry_delay, self.issue, key, start, done, attempt)
            return
        req = _ClientRequest(key, start, clock.now, host, host.node, done, attempt)
        size = message_size(Message(wire.LOOKUP, key=key))
        clock.schedule(clock.now + sim.net.delay(size), self._arrive, req)

    def _arrive(self, req):
        sim = self.sim
        node = req.node
        if not node.alive:
            sim.clock.schedule(req.sent + sim.params.latency.rpc_timeout, self._finish, req, False, "entry_offline")
            return
        req.host.pending.append(req)
        done = sim.net.occupy(req.host.endpoint, sim.params.processing.request_cost)
        sim.clock.schedule(done, self._run, req)

    def _run(self, req):
        node = req.node
        if not node.alive or req.finished:
            return
        self.sim.net.spawn(
            node, node.lookup(req.key),
            on_done=lambda peer: self._reply(req, True, ""),
            on_error=lambda exc: self._reply(req, False, self._error_kind(exc)),
        )

    @staticmethod
    def _error_kind(exc):
        if isinstance(exc, LookupFailed):
            return exc.kind
        raise exc

    def _reply(self, req, success, kind):
        sim = self.sim
        try:
            req.host.pending.remove(req)
        except ValueError:
            pass
        msg = Message(wire.LOOKUP_REPLY, peer=req.node.ref if success else None)
        size = message_size(msg)
        sim.net.send_sample(req.node.id, size)
        sim.clock.schedule(sim.clock.now + sim.net.delay(size), self._finish, req, success, kind)

    def entry_lost(self, req):
        clock = self.sim.clock
        clock.schedule(clock.now + self.sim.params.latency.rpc_timeout, self._finish, req, False, "entry_offline")

    def _finish(self, req, success, kind):
        if req.finished:
            return
        req.finished = True
        now = self.sim.clock.now
        if not success and self.retry and req.attempt < self.sim.params.max_attempts:
            self.issue(req.key, req.start, req.done, req.attempt + 1)
            return
        rec = LookupRecord(req.start, now, success, req.key, kind)
        self.records.append(rec)
        req.done(rec)


@dataclass
class ExperimentResult:
    config: object
    duration: float
    lookups: list
    traffic: object
    cycles: list
    node_classes: dict
    stats: dict

    def write_logs(self, directory):
        os.makedirs(directory, exist_ok=True)
        write_lookups(os.path.join(directory, "lookups.csv"), self.lookups)
        write_traffic(os.path.join(directory, "traffic.csv"), self.traffic)
        write_manager(os.path.join(directory, "manager.csv"), self.cycles)


LOOKUP_COLUMNS = ("time_start", "time_end", "key", "success", "error_kind")
TRAFFIC_COLUMNS = ("time", "node", "bytes")
MANAGER_COLUMNS = ("time", "node", "wmc", "ec", "interval_before", "interval_after", "immediate")


def _f(x):
    return f"{x:.6f}"


def write_lookups(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOOKUP_COLUMNS)
        for r in records:
            w.writerow((_f(r.start), _f(r.end), r.key, int(r.success), r.error_kind))


def write_traffic(path, traffic):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(TRAFFIC_COLUMNS) + "\n")
        fh.writelines(f"{t:.6f},{n},{b}\n" for t, n, b in traffic.rows())


def write_manager(path, cycles):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(MANAGER_COLUMNS) + "\n")
        fh.writelines(
            f"{c.time:.6f},{c.node},{c.wmc},{c.ec},{c.interval_before:.6f},"
            f"{c.interval_after:.6f},{int(c.immediate)}\n"
            for c in cycles
        )


class Simulation:
    """Wires clock, network, hosts, managers and the workload executor."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.params = cfg.sim
        self.policy = cfg.policy_config()
        self.ring = Ring(self.params.ring_bits)
        self.clock = VirtualClock()
        self.net = Network(self.clock, substream(cfg.seed, "latency-jitter"),
                           self.params.latency, self.params.processing)
        self.horizon = float(cfg.horizon)
        self.cycles: list[CycleRecord] = []
        self.incarnations: list[ChordNode] = []
        self.immediate_runs = 0

        n = cfg.node_count
        pattern = ChurnPattern(cfg.churn)
        refs = [node_ref(self.ring, i) for i in range(n)]
        if len({r.id for r in refs}) != n:
            raise ValueError("node identifier collision; increase ring_bits")
        # bootstrap order: node 0 is well known, then the rest by index
        self.candidates = [tuple(r for j, r in enumerate(refs) if j != i) for i in range(n)]
        self.hosts = []
        for i, ref in enumerate(refs):
            phases = generate_lifecycle(pattern, i, cfg.seed, self.horizon, n)
            self.hosts.append(Host(self, i, ref, phases, pattern.node_class(i, n)))
        self.node_classes = {h.ref.id: h.churn_class for h in self.hosts}

        spec = WorkloadSpec.preset(cfg.workload) if isinstance(cfg.workload, str) else cfg.workload
        self.executor = WorkloadExecutor(self, plan(spec, cfg.seed, self.ring.m), cfg.retry_on_error)

    def any_joined(self, exclude=None):
        return any(h.node is not None and h.node.joined for h in self.hosts if h.index != exclude)

    def run(self):
        clock = self.clock
        for host in self.hosts:
            for phase in host.phases:
                if phase.online:
                    clock.schedule(phase.start, host.go_online, phase)
                    if phase.end < self.horizon:
                        clock.schedule(phase.end, host.go_offline)
        clock.schedule(min(self.params.warmup, self.horizon), self.executor.start)
        ex = self.executor
        clock.run(until=self.horizon, stop=lambda: ex.completed_at is not None)
        if ex.completed_at is not None:
            end = min(self.horizon, ex.completed_at + self.params.window)
        else:
            end = self.horizon
        clock.run(until=end)

        stats = {
            "events": clock.fired,
            "messages": self.net.messages,
            "failed_calls": self.net.failed_calls,
            "access_error_events": sum(n.access_errors for n in self.incarnations),
            "wasted_events": sum(n.wasted_events for n in self.incarnations),
            "maintenance_runs": sum(n.maintenance_runs for n in self.incarnations),
            "unchanged_runs": sum(n.unchanged_runs for n in self.incarnations),
            "immediate_runs": self.immediate_runs,
            "incarnations": len(self.incarnations),
            "workload_completed_at": ex.completed_at,
        }
        return ExperimentResult(self.cfg, end, ex.records, self.net.traffic, self.cycles,
                                self.node_classes, stats)


def run_experiment(cfg):
    """Run one experiment (one seed) and return its raw logs."""
    cfg.validate()
    return Simulation(cfg).run()
