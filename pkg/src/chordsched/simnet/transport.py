"""Message transport with latency, per-node processing queues and byte accounting.

Every send by a node is logged as one traffic sample.  A request to a node
that is off-line (or has not finished joining) is answered by a timeout at
``send time + rpc_timeout``.  Each node handles incoming requests one at a
time; a request waits until the node's processor is free, then occupies it
for ``ProcessingModel.request_cost`` seconds.  Maintenance passes also
occupy the processor, which is how maintenance load slows lookups down.

One-way messages (routing outcomes) are delivered to whichever process is
awaiting their token; they are lost silently if the receiver is off-line.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass

from ..chord import RPC_TIMEOUT
from .. import wire
from ..wire import message_size

__all__ = ["LatencyModel", "ProcessingModel", "Network", "Process", "TrafficLog", "message_size"]


@dataclass(frozen=True)
class LatencyModel:
    base_latency: float = 0.5e-3
    per_byte: float = 1e-6 / 1024
    jitter: float = 0.10
    rpc_timeout: float = 2.0

    def __post_init__(self):
        if self.base_latency < 0 or self.per_byte < 0 or not 0 <= self.jitter < 1:
            raise ValueError("invalid latency model")
        if self.rpc_timeout <= 0:
            raise ValueError("rpc_timeout must be positive")


@dataclass(frozen=True)
class ProcessingModel:
    request_cost: float = 0.02
    maintenance_cost: float = 0.3

    def __post_init__(self):
        if self.request_cost < 0 or self.maintenance_cost < 0:
            raise ValueError("processing costs must be non-negative")


class TrafficLog:
    """Column store of (time, node, bytes) samples."""

    def __init__(self):
        self.times = array("d")
        self.nodes = []
        self.sizes = array("q")

    def record(self, time, node, size):
        self.times.append(time)
        self.nodes.append(node)
        self.sizes.append(size)

    def __len__(self):
        return len(self.times)

    def total_bytes(self):
        return sum(self.sizes)

    def rows(self):
        return zip(self.times, self.nodes, self.sizes)


class Process:
    """Drives one node coroutine, turning yielded ``(peer, msg)`` into RPCs."""

    __slots__ = ("net", "node", "gen", "on_done", "on_error")

    def __init__(self, net, node, gen, on_done=None, on_error=None):
        self.net = net
        self.node = node
        self.gen = gen
        self.on_done = on_done
        self.on_error = on_error

    def start(self):
        self.step(None)

    def step(self, value):
        self._advance(self.gen.send, value)

    def fail(self):
        if not self.node.alive:
            return
        net = self.net
        net.failed_calls += 1
        net.failed_by_node[self.node.id] = net.failed_by_node.get(self.node.id, 0) + 1
        self._advance(self.gen.throw, RPC_TIMEOUT)

    def _advance(self, resume, value):
        if not self.node.alive:
            return
        net = self.net
        while True:
            try:
                peer, msg = resume(value)
            except StopIteration as stop:
                if self.on_done is not None:
                    self.on_done(stop.value)
                return
            except Exception as exc:
                if self.on_error is None:
                    raise
                self.on_error(exc)
                return
            if peer is None:
                net.await_outcome(self, msg)
                return
            if msg.kind in wire.ONE_WAY_KINDS:
                net.send_one_way(self.node, peer, msg)
                resume, value = self.gen.send, None
                continue
            net.rpc(self, peer, msg)
            return


class Endpoint:
    """Addressable slot for one node; holds the current incarnation, if any."""

    __slots__ = ("address", "node", "busy_until", "offline_at")

    def __init__(self, address):
        self.address = address
        self.node = None
        self.busy_until = 0.0
        self.offline_at = float("inf")

    def responsive(self):
        node = self.node
        return node is not None and node.joined


class Network:
    def __init__(self, clock, rng, latency=None, processing=None):
        self.clock = clock
        self.rng = rng
        self.latency = latency or LatencyModel()
        self.processing = processing or ProcessingModel()
        self.endpoints = {}
        self.traffic = TrafficLog()
        self.failed_calls = 0
        self.failed_by_node = {}
        self.messages = 0
        self.waiting = {}
        # outcomes that overtook the first hop's acknowledgement
        self.early = {}

    def endpoint(self, address):
        ep = self.endpoints.get(address)
        if ep is None:
            ep = self.endpoints[address] = Endpoint(address)
        return ep

    def spawn(self, node, gen, on_done=None, on_error=None):
        proc = Process(self, node, gen, on_done, on_error)
        proc.start()
        return proc

    def delay(self, size):
        lat = self.latency
        d = lat.base_latency + size * lat.per_byte
        if lat.jitter:
            d *= 1.0 + lat.jitter * (2.0 * self.rng.random() - 1.0)
        return d

    def occupy(self, ep, cost):
        """Reserve ``cost`` seconds of the endpoint's processor; returns finish time."""
        start = ep.busy_until
        now = self.clock.now
        if start < now:
            start = now
        ep.busy_until = start + cost
        return ep.busy_until

    def send_sample(self, node_id, size):
        self.traffic.record(self.clock.now, node_id, size)
        self.messages += 1

    def rpc(self, proc, peer, msg):
        clock = self.clock
        size = message_size(msg)
        self.send_sample(proc.node.id, size)
        ep = self.endpoints.get(peer.address)
        clock.schedule(clock.now + self.delay(size), self._deliver, proc, ep, msg, clock.now)

    def _deliver(self, proc, ep, msg, sent):
        clock = self.clock
        deadline = sent + self.latency.rpc_timeout
        if ep is None or not ep.responsive():
            clock.schedule(deadline, proc.fail)
            return
        done = self.occupy(ep, self.processing.request_cost)
        if done >= deadline or done >= ep.offline_at:
            clock.schedule(deadline, proc.fail)
            return
        clock.schedule(done, self._handle, proc, ep.node, msg, deadline)

    def _handle(self, proc, node, msg, deadline):
        clock = self.clock
        if not node.alive:
            clock.schedule(max(deadline, clock.now), proc.fail)
            return
        resp = node.handle_rpc(msg)
        if msg.kind == wire.ROUTE:
            self.spawn(node, node.route_onward(msg))
        size = message_size(resp)
        self.send_sample(node.id, size)
        arrival = clock.now + self.delay(size)
        if arrival > deadline:
            clock.schedule(deadline, proc.fail)
        else:
            clock.schedule(arrival, proc.step, resp)

    # -- one-way routing outcomes ----------------------------------------

    def await_outcome(self, proc, wait):
        msg = self.early.pop(wait.token, None)
        if msg is not None:
            proc.step(msg)
            return
        self.waiting[wait.token] = proc
        self.clock.call_later(wait.timeout, self._expire, wait.token)

    def _expire(self, token):
        proc = self.waiting.pop(token, None)
        if proc is not None:
            proc.step(None)

    def send_one_way(self, node, peer, msg):
        clock = self.clock
        if peer.id == node.id:
            clock.schedule(clock.now, self._resolve, msg)
            return
        size = message_size(msg)
        self.send_sample(node.id, size)
        ep = self.endpoints.get(peer.address)
        clock.schedule(clock.now + self.delay(size), self._deliver_one_way, ep, msg)

    def _deliver_one_way(self, ep, msg):
        if ep is None or not ep.responsive():
            return
        done = self.occupy(ep, self.processing.request_cost)
        if done < ep.offline_at:
            self.clock.schedule(done, self._resolve, msg)

    def _resolve(self, msg):
        proc = self.waiting.pop(msg.token, None)
        if proc is not None:
            proc.step(msg)
        else:
            self.early[msg.token] = msg
