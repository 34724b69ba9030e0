"""Chord node state machine.

Remote operations are generator coroutines.  Each remote call is expressed
as ``response = yield (peer, message)``; whoever drives the coroutine (the
simulator's transport) sends back the response or throws :class:`RpcTimeout`
into it.  Handlers for incoming requests (``handle_rpc``) are synchronous.

Two more yield forms exist for recursive routing: ``yield (peer, msg)``
with a one-way message kind is a fire-and-forget send, and
``yield (None, Await(token, timeout))`` suspends until the routing outcome
for ``token`` arrives (or resumes with ``None`` on timeout).

User lookups are routed recursively: each hop acknowledges the request and
forwards it itself, so a broken link is observed by the node that holds it.
Maintenance (finger repair, joins) uses iterative searches from the
maintaining node.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from . import kernels, wire
from .autonomic import EventKind
from .errors import InvalidArgument, JoinFailed, LookupFailed
from .ring import Ring
from .wire import Message

ROUTING = "routing"
MAINTENANCE = "maintenance"

DEFAULT_SUCCESSOR_LIST = 4
MAX_HOPS = 32
FINGER_ATTEMPTS = 2
ROUTE_TIMEOUT = 6.0
# how long a peer that failed to answer is kept out of the peer-set
SUSPECT_TTL = 60.0

_tokens = itertools.count(1)


class RpcTimeout(Exception):
    """Raised inside a coroutine when the called peer did not answer."""


RPC_TIMEOUT = RpcTimeout()


@dataclass(frozen=True, slots=True)
class PeerRef:
    id: int
    address: str


@dataclass(frozen=True, slots=True)
class Await:
    token: int
    timeout: float


@dataclass(frozen=True, slots=True)
class ManagerEvent:
    kind: EventKind
    node: int
    time: float
    context: str


@dataclass(frozen=True)
class MaintenanceReport:
    changed: bool
    errors: int
    rpcs_sent: int
    bytes_sent: int


class ChordNode:
    """One incarnation of a Chord node.

    ``clock`` only needs a ``now`` attribute.  ``runtime`` (optional) is
    notified when the maintenance schedule changes; the simulator's host
    object implements it.  Without a runtime the node never schedules itself,
    which is what the static-overlay tests use.
    """

    def __init__(self, ref, ring, clock, successor_list_length=DEFAULT_SUCCESSOR_LIST,
                 initial_interval=2.0):
        self.ref = ref
        self.id = ref.id
        self.ring = ring
        self.clock = clock
        self.r = successor_list_length
        self.successor = ref
        self.predecessor: Optional[PeerRef] = None
        self.successor_list: list[PeerRef] = []
        self.fingers: list[Optional[PeerRef]] = [None] * ring.m
        self._candidates = None
        self.last_hop = None
        self.suspects: dict[int, float] = {}

        self.joined = False
        self.alive = True
        self.runtime = None
        self.on_event = None
        self.bootstrap_candidates = ()

        self.route_timeout = ROUTE_TIMEOUT
        self.maintenance_interval = float(initial_interval)
        self.last_maintenance_end = 0.0
        self.maintaining = False

        self.access_errors = 0
        self.wasted_events = 0
        self.maintenance_runs = 0
        self.unchanged_runs = 0
        # per-operation tallies, reset by maintain()
        self._op_errors = 0
        self._op_rpcs = 0
        self._op_bytes = 0

    def __repr__(self):
        return f"ChordNode({self.id}, succ={self.successor.id})"

    # -- local state -------------------------------------------------------

    def create(self):
        """Start a new ring containing only this node."""
        self.successor = self.ref
        self.predecessor = None
        self.successor_list = []
        self.fingers = [None] * self.ring.m
        self._candidates = None
        self.joined = True

    def peer_set_snapshot(self):
        return (self.successor, self.predecessor, tuple(self.successor_list), tuple(self.fingers))

    def _routing_candidates(self):
        if self._candidates is None:
            seen = {self.id}
            cands = []
            for p in (self.successor, *self.successor_list, *self.fingers):
                if p is not None and p.id not in seen:
                    seen.add(p.id)
                    cands.append(p)
            self._candidates = (cands, [p.id for p in cands])
        return self._candidates

    def closest_preceding_peer(self, key):
        """Finger or successor-list entry furthest along in (self, key), else self."""
        cands, ids = self._routing_candidates()
        i = kernels.closest_preceding(self.id, key, ids, self.ring.mask)
        return self.ref if i < 0 else cands[i]

    def _set_successor(self, peer):
        self.successor = peer
        if peer.id == self.id:
            self.successor_list = []
        elif not self.successor_list or self.successor_list[0] != peer:
            rest = [p for p in self.successor_list if p != peer
                    and self.ring.distance(self.id, p.id) > self.ring.distance(self.id, peer.id)]
            self.successor_list = [peer, *rest][: self.r]
        self._candidates = None

    def suspected(self, peer):
        until = self.suspects.get(peer.id)
        if until is None:
            return False
        if until <= self.clock.now:
            del self.suspects[peer.id]
            return False
        return True

    def _drop_peer(self, peer):
        """Forget a peer found to be unreachable; fall back to the next successor."""
        self.suspects[peer.id] = self.clock.now + SUSPECT_TTL
        if self.predecessor == peer:
            self.predecessor = None
        self.successor_list = [p for p in self.successor_list if p != peer]
        self.fingers = [None if f == peer else f for f in self.fingers]
        if self.successor == peer:
            if self.successor_list:
                self.successor = self.successor_list[0]
            else:
                live = [f for f in self.fingers if f is not None]
                if live:
                    nearest = min(live, key=lambda p: self.ring.distance(self.id, p.id))
                    self._set_successor(nearest)
                else:
                    self.successor = self.ref
        self._candidates = None

    # -- events ------------------------------------------------------------

    def _emit(self, kind, context):
        if kind is EventKind.ACCESS_ERROR:
            self.access_errors += 1
        else:
            self.wasted_events += 1
        if self.on_event is not None:
            self.on_event(ManagerEvent(kind, self.id, self.clock.now, context))

    # -- remote calls ------------------------------------------------------

    def _call(self, peer, msg, context):
        if peer.id == self.id:
            return self.handle_rpc(msg)
        self._op_rpcs += 1
        self._op_bytes += wire.message_size(msg)
        try:
            return (yield (peer, msg))
        except RpcTimeout:
            self._op_errors += 1
            self._emit(EventKind.ACCESS_ERROR, context)
            raise

    def find_successor(self, key, start=None, context=ROUTING):
        """Iterative successor search; returns the PeerRef responsible for ``key``.

        ``start`` names the first node to ask (used by join); otherwise the
        search begins from local state.
        """
        self.last_hop = None
        if start is None:
            if self.ring.in_half_open(key, self.id, self.successor.id):
                return self.successor
            nxt = self.closest_preceding_peer(key)
            if nxt.id == self.id:
                return self.successor
        else:
            nxt = start
        for _ in range(MAX_HOPS):
            try:
                resp = yield from self._call(nxt, Message(wire.FIND_SUCCESSOR, key=key), context)
            except RpcTimeout:
                self._drop_peer(nxt)
                raise LookupFailed(f"hop {nxt.id} did not answer", kind="timeout") from None
            self.last_hop = nxt
            if resp.found:
                return resp.peer
            nxt = resp.peer
            if self.suspected(nxt):
                raise LookupFailed(f"hop {nxt.id} is suspected dead", kind="suspect")
        raise LookupFailed("hop limit exceeded", kind="max_hops")

    def _route_step(self, key):
        """Next hop for ``key`` and whether that hop is the responsible node."""
        succ = self.successor
        if self.ring.in_half_open(key, self.id, succ.id):
            return succ, True
        nxt = self.closest_preceding_peer(key)
        if nxt.id == self.id:
            return succ, True
        return nxt, False

    def lookup(self, key):
        """Resolve ``key`` by recursive routing; returns the responsible PeerRef.

        Failures are not retried.  A failed first hop raises here; a failure
        further along is reported back by the hop that saw it.
        """
        if not self.joined:
            raise LookupFailed("node has not joined", kind="not_joined")
        nxt, final = self._route_step(key)
        if final and nxt.id == self.id:
            return self.ref
        token = next(_tokens)
        msg = Message(wire.ROUTE, key=key, peer=self.ref, found=final, token=token)
        try:
            yield from self._call(nxt, msg, ROUTING)
        except RpcTimeout:
            self._drop_peer(nxt)
            raise LookupFailed(f"hop {nxt.id} did not answer", kind="timeout") from None
        outcome = yield (None, Await(token, self.route_timeout))
        if outcome is None:
            raise LookupFailed("routing outcome never arrived", kind="lost")
        if outcome.kind == wire.ROUTE_FAILED:
            raise LookupFailed("a downstream hop did not answer", kind="timeout")
        return outcome.peer

    def route_onward(self, msg):
        """Continue a ROUTE request received from another node."""
        origin, key, token = msg.peer, msg.key, msg.token
        if msg.found:
            yield (origin, Message(wire.ROUTE_RESULT, key=key, peer=self.ref, token=token))
            return
        nxt, final = self._route_step(key)
        if nxt.id == self.id:
            yield (origin, Message(wire.ROUTE_RESULT, key=key, peer=self.ref, token=token))
            return
        try:
            yield from self._call(nxt, msg._replace(found=final), ROUTING)
        except RpcTimeout:
            self._drop_peer(nxt)
            yield (origin, Message(wire.ROUTE_FAILED, key=key, token=token))

    def join(self, bootstrap):
        """Join the ring known to ``bootstrap``; fingers fill in during maintenance."""
        try:
            succ = yield from self.find_successor(self.id, start=bootstrap, context=MAINTENANCE)
        except LookupFailed as exc:
            raise JoinFailed(f"join via {bootstrap.id} failed: {exc}") from None
        if succ.id == self.id:
            # the ring still points at our previous incarnation
            succ = None
            if self.last_hop is not None and self.last_hop.id != self.id:
                try:
                    resp = yield from self._call(self.last_hop, wire.GET_SUCCESSOR_LIST_MSG, MAINTENANCE)
                    succ = next((p for p in resp.peers if p.id != self.id), None)
                except RpcTimeout:
                    pass
                if succ is None:
                    succ = self.last_hop
            if succ is None:
                raise JoinFailed("bootstrap resolved to this node")
        self.predecessor = None
        self.successor_list = []
        self.fingers = [None] * self.ring.m
        self._set_successor(succ)
        self.joined = True

    def join_any(self, candidates):
        """Try bootstrap candidates in order; create a ring if none answers."""
        for cand in candidates:
            if cand.id == self.id:
                continue
            try:
                yield from self.join(cand)
                return cand
            except JoinFailed:
                continue
        self.create()
        return None

    # -- maintenance -------------------------------------------------------

    def maintain(self):
        """One full maintenance pass; returns a :class:`MaintenanceReport`."""
        self._op_errors = self._op_rpcs = self._op_bytes = 0
        before = self.peer_set_snapshot()
        yield from self._stabilize()
        yield from self._refresh_successor_list()
        yield from self._fix_fingers()
        yield from self._check_predecessor()
        changed = self.peer_set_snapshot() != before
        self.maintenance_runs += 1
        if not changed:
            self.unchanged_runs += 1
            self._emit(EventKind.WASTED_MAINTENANCE, MAINTENANCE)
        return MaintenanceReport(changed, self._op_errors, self._op_rpcs, self._op_bytes)

    def _stabilize(self):
        while True:
            succ = self.successor
            if succ.id == self.id:
                if self.predecessor is None and self.bootstrap_candidates and self._lost_ring:
                    self._lost_ring = False
                    yield from self.join_any(self.bootstrap_candidates)
                    if self.successor.id == self.id:
                        return
                    continue
                x = self.predecessor
            else:
                try:
                    resp = yield from self._call(succ, wire.GET_PREDECESSOR_MSG, MAINTENANCE)
                except RpcTimeout:
                    self._drop_peer(succ)
                    if self.successor.id == self.id:
                        self._lost_ring = True
                    continue
                x = resp.peer
            if x is not None and self.ring.in_open(x.id, self.id, succ.id) and not self.suspected(x):
                self._set_successor(x)
            break
        succ = self.successor
        if succ.id != self.id:
            try:
                yield from self._call(succ, Message(wire.NOTIFY, peer=self.ref), MAINTENANCE)
            except RpcTimeout:
                self._drop_peer(succ)

    _lost_ring = False

    def _refresh_successor_list(self):
        succ = self.successor
        if succ.id == self.id:
            self.successor_list = []
            self._candidates = None
            return
        try:
            resp = yield from self._call(succ, wire.GET_SUCCESSOR_LIST_MSG, MAINTENANCE)
        except RpcTimeout:
            self._drop_peer(succ)
            return
        dist = self.ring.distance
        base = dist(self.id, succ.id)
        seen = {self.id, succ.id}
        rest = []
        for p in resp.peers:
            if p.id not in seen and dist(self.id, p.id) > base and not self.suspected(p):
                seen.add(p.id)
                rest.append(p)
        rest.sort(key=lambda p: dist(self.id, p.id))
        new = [succ, *rest][: self.r]
        if new != self.successor_list:
            self.successor_list = new
            self._candidates = None

    def _fix_fingers(self):
        m = self.ring.m
        fingers = list(self.fingers)
        succ = self.successor
        if succ.id == self.id:
            fingers = [None] * m
        else:
            i = kernels.next_unresolved_finger(self.id, 1, succ.id, m)
            for j in range(i - 1):
                fingers[j] = succ
            attempts = 0
            while i <= m:
                target = (self.id + (1 << (i - 1))) & self.ring.mask
                try:
                    found = yield from self.find_successor(target, context=MAINTENANCE)
                except LookupFailed:
                    attempts += 1
                    if attempts < FINGER_ATTEMPTS:
                        continue
                    attempts = 0
                    fingers[i - 1] = self.fingers[i - 1]
                    i += 1
                    continue
                attempts = 0
                if found.id != self.id and self.suspected(found):
                    # stale pointer elsewhere; leave this finger unset for now
                    fingers[i - 1] = None
                    i += 1
                    continue
                if found.id == self.id:
                    for j in range(i - 1, m):
                        fingers[j] = None
                    break
                nxt = kernels.next_unresolved_finger(self.id, i + 1, found.id, m)
                for j in range(i - 1, nxt - 1):
                    fingers[j] = found
                i = nxt
        # peers dropped while resolving must not reappear
        if fingers != self.fingers:
            self.fingers = fingers
            self._candidates = None

    def _check_predecessor(self):
        pred = self.predecessor
        if pred is None or pred.id == self.id:
            return
        try:
            yield from self._call(pred, wire.PING_MSG, MAINTENANCE)
        except RpcTimeout:
            if self.predecessor == pred:
                self.predecessor = None

    # -- scheduling --------------------------------------------------------

    def set_maintenance_interval(self, interval):
        if interval <= 0:
            raise InvalidArgument(f"maintenance interval must be positive, got {interval}")
        self.maintenance_interval = float(interval)
        if self.runtime is not None:
            self.runtime.reschedule_maintenance(self)

    def request_immediate_maintenance(self):
        if self.runtime is not None:
            self.runtime.immediate_maintenance(self)

    # -- incoming requests -------------------------------------------------

    def handle_rpc(self, msg):
        kind = msg.kind
        if kind == wire.FIND_SUCCESSOR:
            key = msg.key
            succ = self.successor
            if self.ring.in_half_open(key, self.id, succ.id):
                return Message(wire.SUCCESSOR_REPLY, peer=succ, found=True)
            nxt = self.closest_preceding_peer(key)
            if nxt.id == self.id:
                return Message(wire.SUCCESSOR_REPLY, peer=succ, found=True)
            return Message(wire.SUCCESSOR_REPLY, peer=nxt, found=False)
        if kind == wire.PING or kind == wire.ROUTE:
            return wire.ACK_MSG
        if kind == wire.GET_PREDECESSOR:
            return Message(wire.PREDECESSOR_REPLY, peer=self.predecessor)
        if kind == wire.GET_SUCCESSOR_LIST:
            return Message(wire.SUCCESSOR_LIST_REPLY, peers=tuple(self.successor_list))
        if kind == wire.NOTIFY:
            p = msg.peer
            if p.id != self.id:
                self.suspects.pop(p.id, None)
                pred = self.predecessor
                if pred is None or self.ring.in_open(p.id, pred.id, self.id):
                    self.predecessor = p
            return wire.ACK_MSG
        raise InvalidArgument(f"unknown request kind {kind!r}")
