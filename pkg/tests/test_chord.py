import random

import pytest
from hypothesis import given, settings, strategies as st

from chordsched import wire
from chordsched.autonomic import EventKind
from chordsched.chord import ChordNode, PeerRef
from chordsched.errors import InvalidArgument, JoinFailed, LookupFailed
from chordsched.ring import Ring
from chordsched.simnet import VirtualClock
from chordsched.wire import Message, message_size

from harness import Overlay, node_ids


def errors(ov):
    return [e for e in ov.events if e.kind is EventKind.ACCESS_ERROR]


def wasted(ov):
    return [e for e in ov.events if e.kind is EventKind.WASTED_MAINTENANCE]


def test_singleton_lookup_returns_self():
    ov = Overlay()
    node = ov.add(12345)
    node.create()
    for key in (0, 12345, 12346, 2**64 - 1):
        assert ov.call(node, node.lookup(key)) == node.ref


def test_lookup_before_join_fails():
    ov = Overlay()
    node = ov.add(1)
    with pytest.raises(LookupFailed) as exc:
        ov.call(node, node.lookup(5))
    assert exc.value.kind == "not_joined"


def _bare_node(m, node_id, fingers=()):
    ring = Ring(m)
    node = ChordNode(PeerRef(node_id, "x"), ring, VirtualClock())
    node.create()
    for i, f in enumerate(fingers):
        node.fingers[i] = PeerRef(f, f"n{f}")
    return node


def test_closest_preceding_peer_examples():
    node = _bare_node(6, 0, [10, 20, 40])
    assert node.closest_preceding_peer(35).id == 20
    assert _bare_node(6, 0).closest_preceding_peer(35).id == 0
    assert node.closest_preceding_peer(1).id == 0


def test_join_into_singleton():
    ov = Overlay()
    a = ov.add(100)
    a.create()
    b = ov.add(2**63)
    ov.call(b, b.join(a.ref))
    assert b.successor == a.ref
    assert b.joined


def test_join_with_offline_bootstrap():
    ov = Overlay()
    b = ov.add(5)
    ghost = PeerRef(9, "nowhere")
    with pytest.raises(JoinFailed):
        ov.call(b, b.join(ghost))
    assert not b.joined


def test_two_node_overlay_converges_in_two_rounds():
    ov = Overlay()
    a = ov.add(100)
    a.create()
    b = ov.add(2**63)
    ov.call(b, b.join(a.ref))
    ov.maintain_all(2)
    assert a.successor == b.ref and b.successor == a.ref
    assert a.predecessor == b.ref and b.predecessor == a.ref


def test_converged_maintain_is_wasted():
    ov = Overlay().build(node_ids(8, seed=3))
    ov.events.clear()
    node = next(iter(ov.nodes.values()))
    report = ov.call(node, node.maintain())
    assert not report.changed
    assert report.errors == 0
    assert len(wasted(ov)) == 1
    assert all(e.context == "maintenance" for e in wasted(ov))


def test_dead_successor_replaced_from_list():
    ov = Overlay().build(node_ids(8, seed=4))
    ids = sorted(ov.nodes)
    node = ov.nodes[ids[0]]
    dead = node.successor
    second = node.successor_list[1]
    ov.kill(dead.id)
    ov.events.clear()
    report = ov.call(node, node.maintain())
    assert node.successor == second
    assert report.changed
    assert report.errors >= 1
    assert not wasted(ov)


def test_lookup_through_dead_successor_fails_with_one_event():
    ov = Overlay().build(node_ids(8, seed=5))
    ids = sorted(ov.nodes)
    node = ov.nodes[ids[2]]
    succ = node.successor
    ov.kill(succ.id)
    ov.events.clear()
    before = ov.net.failed_calls
    key = succ.id  # in (node, successor]
    with pytest.raises(LookupFailed):
        ov.call(node, node.lookup(key))
    errs = errors(ov)
    assert len(errs) == 1
    assert errs[0].node == node.id and errs[0].context == "routing"
    assert ov.net.failed_calls - before == 1


def test_downstream_failure_reported_by_link_owner():
    ov = Overlay().build(node_ids(16, seed=6))
    ids = sorted(ov.nodes)
    origin = ov.nodes[ids[0]]
    # a key owned by a node far from the origin, whose predecessor holds the link
    target = ids[8]
    owner_pred = ov.nodes[ids[7]]
    ov.kill(target)
    ov.events.clear()
    with pytest.raises(LookupFailed):
        ov.call(origin, origin.lookup(target))
    errs = errors(ov)
    assert len(errs) == 1
    assert errs[0].node != origin.id
    assert errs[0].node == owner_pred.id


def test_notify_rules():
    node = _bare_node(8, 100)
    p = PeerRef(50, "p")
    node.handle_rpc(Message(wire.NOTIFY, peer=p))
    assert node.predecessor == p
    # 30 lies outside (50, 100)
    node.handle_rpc(Message(wire.NOTIFY, peer=PeerRef(30, "q")))
    assert node.predecessor == p
    node.handle_rpc(Message(wire.NOTIFY, peer=PeerRef(70, "r")))
    assert node.predecessor.id == 70


def test_find_successor_base_case():
    node = _bare_node(8, 100)
    node.successor = PeerRef(150, "s")
    resp = node.handle_rpc(Message(wire.FIND_SUCCESSOR, key=120))
    assert resp.found and resp.peer.id == 150


def test_set_maintenance_interval_validation():
    node = _bare_node(8, 1)
    assert node.maintenance_interval == 2.0
    node.set_maintenance_interval(600)
    assert node.maintenance_interval == 600
    for bad in (0, -1):
        with pytest.raises(InvalidArgument):
            node.set_maintenance_interval(bad)


def test_message_sizes():
    assert message_size(wire.PING_MSG) == 32
    assert message_size(Message(wire.FIND_SUCCESSOR, key=7)) == 40
    peers = tuple(PeerRef(i, f"n{i}") for i in range(4))
    assert message_size(Message(wire.SUCCESSOR_LIST_REPLY, peers=peers)) == 112


def test_fingers_match_oracle_after_convergence():
    ov = Overlay().build(node_ids(16, seed=7))
    ring = ov.ring
    for node in ov.nodes.values():
        for i in range(1, ring.m + 1):
            expected = ov.oracle(ring.finger_target(node.id, i))
            finger = node.fingers[i - 1]
            if expected == node.id:
                assert finger is None
            else:
                assert finger is not None and finger.id == expected


def test_failed_peer_not_readopted_until_it_notifies():
    ov = Overlay().build(node_ids(8, seed=8))
    ids = sorted(ov.nodes)
    node = ov.nodes[ids[0]]
    dead = node.successor
    ov.kill(dead.id)
    ov.call(node, node.maintain())
    assert node.suspected(dead)
    node.handle_rpc(Message(wire.NOTIFY, peer=dead))
    assert not node.suspected(dead)


@settings(max_examples=25)
@given(st.integers(2, 12), st.integers(0, 10**6))
def test_random_join_orders_converge(n, seed):
    ids = node_ids(n, seed=seed, m=16)
    random.Random(seed).shuffle(ids)
    ov = Overlay(m=16, seed=seed).build(ids)
    rng = random.Random(seed + 1)
    nodes = list(ov.nodes.values())
    for node in nodes:
        # successor_list[0] is the successor after maintenance
        assert node.successor_list[0] == node.successor
    for i in range(50):
        key = rng.randrange(2**16)
        node = nodes[i % n]
        assert ov.call(node, node.lookup(key)).id == ov.oracle(key)


@settings(max_examples=25)
@given(st.integers(4, 12), st.integers(0, 10**6), st.integers(1, 3))
def test_event_soundness_after_failures(n, seed, kills):
    ov = Overlay(m=16, seed=seed).build(node_ids(n, seed=seed, m=16))
    rng = random.Random(seed)
    for nid in rng.sample(sorted(ov.nodes), min(kills, n - 1)):
        ov.kill(nid)
    ov.events.clear()
    base_failed = ov.net.failed_calls
    nodes = list(ov.nodes.values())
    for i in range(30):
        node = nodes[i % len(nodes)]
        try:
            ov.call(node, node.lookup(rng.randrange(2**16)))
        except LookupFailed:
            pass
    before = len(ov.events)
    reports = []
    for node in nodes:
        reports.append(ov.call(node, node.maintain()))
    assert len(errors(ov)) == ov.net.failed_calls - base_failed
    new = ov.events[before:]
    assert sum(e.kind is EventKind.WASTED_MAINTENANCE for e in new) == sum(not r.changed for r in reports)
