"""Broadcast transports and the transmission meter.

Every rebalancing operation moves data through a BroadcastChannel: a node
sends one message and every other registered node receives it.  The channel
keeps a TransmissionLog that counts payload bytes only, so measured
communication load is independent of transport framing.

Two implementations share identical semantics: an in-memory channel for
ordinary use, and a TCP loopback channel that pushes every message through
real sockets using a fixed frame layout (4-byte big-endian payload length,
1-byte message kind, 8-byte sender id, 8-byte round tag, then the payload).
"""

from __future__ import annotations

import socket
import struct
import threading
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import TYPE_CHECKING

from .errors import ParameterError, TransportError

if TYPE_CHECKING:
    from .model import ClusterDatabase

FRAME_HEADER = struct.Struct(">IBQQ")

COLLECT_TIMEOUT = 30.0  # seconds; a stuck collect is always a protocol bug


class MessageKind(IntEnum):
    CODED_PACKET = 1
    SUBFILE_PART = 2
    BARRIER = 3


@dataclass(frozen=True)
class LogEntry:
    seq: int
    sender: int
    kind: MessageKind
    round_tag: int
    payload_bytes: int


@dataclass(frozen=True)
class DeliveryReceipt:
    sender: int
    round_tag: int
    payload_bytes: int


@dataclass
class TransmissionLog:
    entries: list[LogEntry] = field(default_factory=list)

    def record(self, sender: int, kind: MessageKind, round_tag: int, size: int):
        self.entries.append(
            LogEntry(len(self.entries), sender, kind, round_tag, size)
        )

    def total_payload_bytes(self) -> int:
        return sum(e.payload_bytes for e in self.entries)

    def count(self, kind: MessageKind | None = None) -> int:
        if kind is None:
            return len(self.entries)
        return sum(1 for e in self.entries if e.kind == kind)


@dataclass
class OperationResult:
    """What a rebalancing operation produced: the new state and the meter."""

    database: "ClusterDatabase"
    log: TransmissionLog

    @property
    def bytes_transmitted(self) -> int:
        return self.log.total_payload_bytes()


def encode_frame(kind: MessageKind, sender: int, round_tag: int, payload: bytes) -> bytes:
    return FRAME_HEADER.pack(len(payload), int(kind), sender, round_tag) + payload


class BroadcastChannel:
    """Shared bookkeeping: registration, the meter, and blocking collection.

    Subclasses implement _deliver(), which must eventually place the payload
    in the inbox of every registered node other than the sender.
    """

    def __init__(self):
        self.log = TransmissionLog()
        self._registered: set[int] = set()
        self._inboxes: dict[int, dict[tuple[int, int], deque]] = {}
        self._cond = threading.Condition()
        self._closed = False

    def register(self, node_id: int):
        with self._cond:
            if node_id in self._registered:
                raise ParameterError(f"node {node_id} already registered")
            self._registered.add(node_id)
            self._inboxes[node_id] = {}
        self._attach(node_id)

    @property
    def participants(self) -> tuple[int, ...]:
        return tuple(sorted(self._registered))

    def broadcast(
        self, sender: int, kind: MessageKind, round_tag: int, payload: bytes
    ) -> DeliveryReceipt:
        if self._closed:
            raise TransportError("channel is closed")
        if sender not in self._registered:
            raise ParameterError(f"sender {sender} is not registered")
        if kind == MessageKind.BARRIER:
            raise ParameterError("barrier frames are internal to close()")
        self.log.record(sender, kind, round_tag, len(payload))
        self._deliver(sender, kind, round_tag, payload)
        return DeliveryReceipt(sender, round_tag, len(payload))

    def collect(self, receiver: int, round_tag: int, senders) -> dict[int, bytes]:
        """Block until one payload with round_tag arrived from every sender.

        Payloads from the same sender and tag are handed out in send order.
        """
        senders = list(senders)
        if receiver not in self._registered:
            raise ParameterError(f"receiver {receiver} is not registered")
        bad = [s for s in senders if s == receiver or s not in self._registered]
        if bad:
            raise ParameterError(f"cannot collect from {bad}")
        keys = [(round_tag, s) for s in senders]
        with self._cond:
            box = self._inboxes[receiver]
            ready = lambda: all(box.get(key) for key in keys)
            if not self._cond.wait_for(ready, timeout=COLLECT_TIMEOUT):
                missing = [s for (t, s) in keys if not box.get((t, s))]
                raise TransportError(
                    f"node {receiver} timed out waiting for round {round_tag} "
                    f"from {missing}"
                )
            return {s: box[(round_tag, s)].popleft() for s in senders}

    def close(self):
        self._closed = True

    # -- subclass hooks ----------------------------------------------------

    def _attach(self, node_id: int):
        pass

    def _deliver(self, sender: int, kind: MessageKind, round_tag: int, payload: bytes):
        raise NotImplementedError

    def _push(self, receiver: int, sender: int, round_tag: int, payload: bytes):
        with self._cond:
            box = self._inboxes[receiver]
            box.setdefault((round_tag, sender), deque()).append(payload)
            self._cond.notify_all()


class MemoryBroadcastChannel(BroadcastChannel):
    """Direct in-process delivery; the default transport.

    Delivery completes inside broadcast(), so a later collect always finds
    its payloads immediately.  Single-threaded by design: no locking on the
    delivery path (the socket transport's reader threads use the locked
    path instead).
    """

    def _deliver(self, sender, kind, round_tag, payload):
        for node in self._registered:
            if node != sender:
                box = self._inboxes[node]
                key = (round_tag, sender)
                queue = box.get(key)
                if queue is None:
                    queue = box[key] = deque()
                queue.append(payload)


def _read_exact(sock: socket.socket, size: int) -> bytes | None:
    """Read exactly size bytes, or None on a clean EOF at a frame boundary."""
    chunks = []
    remaining = size
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            if remaining == size:
                return None
            raise TransportError("connection closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def _read_frame(sock: socket.socket):
    header = _read_exact(sock, FRAME_HEADER.size)
    if header is None:
        return None
    length, kind, sender, round_tag = FRAME_HEADER.unpack(header)
    payload = _read_exact(sock, length) if length else b""
    if length and payload is None:
        raise TransportError("connection closed mid-frame")
    return MessageKind(kind), sender, round_tag, payload


class SocketBroadcastChannel(BroadcastChannel):
    """Loopback TCP transport: every broadcast traverses a relay socket.

    A hub thread accepts one connection per node and relays each incoming
    frame to all other connections.  Per-node reader threads parse frames
    back into the shared inboxes.  close() floods barrier frames and waits
    until every node has seen every other node's barrier, which proves all
    earlier frames were delivered (TCP preserves per-connection order and
    the hub serializes relays).
    """

    def __init__(self):
        super().__init__()
        self._listener = socket.create_server(("127.0.0.1", 0))
        self._hub_conns: list[socket.socket] = []
        self._hub_lock = threading.Lock()
        self._clients: dict[int, socket.socket] = {}
        self._send_lock = threading.Lock()
        self._readers: list[threading.Thread] = []
        self._hub_threads: list[threading.Thread] = []
        self._barriers: dict[int, set[int]] = {}
        self._accepting = True
        accept = threading.Thread(target=self._accept_loop, daemon=True)
        accept.start()
        self._hub_threads.append(accept)

    # -- hub side -----------------------------------------------------------

    def _accept_loop(self):
        while self._accepting:
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            with self._hub_lock:
                self._hub_conns.append(conn)
            t = threading.Thread(target=self._relay_loop, args=(conn,), daemon=True)
            t.start()
            self._hub_threads.append(t)

    def _relay_loop(self, conn: socket.socket):
        try:
            while True:
                header = _read_exact(conn, FRAME_HEADER.size)
                if header is None:
                    return
                length = FRAME_HEADER.unpack(header)[0]
                payload = _read_exact(conn, length) if length else b""
                frame = header + payload
                with self._hub_lock:
                    for other in self._hub_conns:
                        if other is not conn:
                            try:
                                other.sendall(frame)
                            except OSError:
                                pass
        except (TransportError, OSError):
            return
        finally:
            with self._hub_lock:
                if conn in self._hub_conns:
                    self._hub_conns.remove(conn)
            conn.close()

    # -- node side ----------------------------------------------------------

    def _attach(self, node_id: int):
        try:
            sock = socket.create_connection(self._listener.getsockname())
        except OSError as err:
            raise TransportError(f"node {node_id} could not reach the relay: {err}")
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._clients[node_id] = sock
        self._barriers[node_id] = set()
        t = threading.Thread(target=self._reader_loop, args=(node_id, sock), daemon=True)
        t.start()
        self._readers.append(t)

    def _reader_loop(self, node_id: int, sock: socket.socket):
        while True:
            try:
                frame = _read_frame(sock)
            except (TransportError, OSError):
                return
            if frame is None:
                return
            kind, sender, round_tag, payload = frame
            if kind == MessageKind.BARRIER:
                with self._cond:
                    self._barriers[node_id].add(sender)
                    self._cond.notify_all()
            else:
                self._push(node_id, sender, round_tag, payload)

    def _deliver(self, sender, kind, round_tag, payload):
        frame = encode_frame(kind, sender, round_tag, payload)
        with self._send_lock:
            try:
                self._clients[sender].sendall(frame)
            except OSError as err:
                raise TransportError(f"broadcast from node {sender} failed: {err}")

    def close(self):
        if self._closed:
            return
        self._closed = True
        if len(self._clients) > 1:
            with self._send_lock:
                for node_id, sock in self._clients.items():
                    try:
                        sock.sendall(encode_frame(MessageKind.BARRIER, node_id, 0, b""))
                    except OSError:
                        pass
            expected = set(self._clients)
            flushed = lambda: all(
                self._barriers[n] >= expected - {n} for n in expected
            )
            with self._cond:
                self._cond.wait_for(flushed, timeout=COLLECT_TIMEOUT)
        self._accepting = False
        self._listener.close()
        for sock in self._clients.values():
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            sock.close()
        for t in self._readers:
            t.join(timeout=5)


def make_channel(transport: str) -> BroadcastChannel:
    """Channel factory for the two supported transport names."""
    if transport == "memory":
        return MemoryBroadcastChannel()
    if transport == "socket":
        return SocketBroadcastChannel()
    raise ParameterError(f"unknown transport '{transport}'")
