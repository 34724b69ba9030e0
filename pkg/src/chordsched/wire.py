"""RPC message vocabulary and the abstract byte-size model.

Sizes: a 32-byte header, 8 bytes per embedded identifier and 20 bytes per
embedded peer reference; list-valued responses pay per element.  Flags and
request tokens travel in the header.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

HEADER_BYTES = 32
NODE_ID_BYTES = 8
PEER_REF_BYTES = 20

# requests between nodes
PING = "ping"
FIND_SUCCESSOR = "find_successor"
GET_PREDECESSOR = "get_predecessor"
GET_SUCCESSOR_LIST = "get_successor_list"
NOTIFY = "notify"
# responses
ACK = "ack"
SUCCESSOR_REPLY = "successor_reply"
PREDECESSOR_REPLY = "predecessor_reply"
SUCCESSOR_LIST_REPLY = "successor_list_reply"
# recursive routing: ROUTE is acknowledged per hop; the outcome travels
# one-way back to the origin as ROUTE_RESULT or ROUTE_FAILED
ROUTE = "route"
ROUTE_RESULT = "route_result"
ROUTE_FAILED = "route_failed"
# workload executor <-> entry node
LOOKUP = "lookup"
LOOKUP_REPLY = "lookup_reply"

REQUEST_KINDS = frozenset({PING, FIND_SUCCESSOR, GET_PREDECESSOR, GET_SUCCESSOR_LIST, NOTIFY, ROUTE, LOOKUP})
ONE_WAY_KINDS = frozenset({ROUTE_RESULT, ROUTE_FAILED})


class Message(NamedTuple):
    kind: str
    key: Optional[int] = None
    peer: Optional[object] = None
    peers: tuple = ()
    found: bool = False
    token: int = 0


def message_size(msg):
    size = HEADER_BYTES
    if msg.key is not None:
        size += NODE_ID_BYTES
    if msg.peer is not None:
        size += PEER_REF_BYTES
    return size + PEER_REF_BYTES * len(msg.peers)


# Shared instances for payload-free messages.
PING_MSG = Message(PING)
ACK_MSG = Message(ACK)
GET_PREDECESSOR_MSG = Message(GET_PREDECESSOR)
GET_SUCCESSOR_LIST_MSG = Message(GET_SUCCESSOR_LIST)
