"""Server <-> client parameter links.

Both implementations move FCP1 bytes. The stream link frames each
message as a 4-byte little-endian length followed by the payload, so
it runs over any connected socket (tests use ``socket.socketpair``).
"""
from __future__ import annotations

import socket
import struct
from collections import deque

from ..models.params import ParameterSet

_LEN = struct.Struct("<I")


class TransportError(RuntimeError):
    pass


def encode_frame(p: ParameterSet) -> bytes:
    payload = p.to_bytes()
    return _LEN.pack(len(payload)) + payload


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(min(n - len(buf), 1 << 20))
        if not chunk:
            raise TransportError(f"stream closed after {len(buf)} of {n} bytes")
        buf += chunk
    return bytes(buf)


class InProcessEnd:
    """One end of an in-memory duplex link."""

    def __init__(self, inbox: deque, outbox: deque):
        self._inbox = inbox
        self._outbox = outbox
        self.sent = 0
        self.received = 0

    def send(self, p: ParameterSet) -> None:
        self._outbox.append(p.to_bytes())
        self.sent += 1

    def recv(self) -> ParameterSet:
        if not self._inbox:
            raise TransportError("no message waiting")
        self.received += 1
        return ParameterSet.from_bytes(self._inbox.popleft())

    def close(self) -> None:
        pass


class StreamEnd:
    """Length-prefixed frames over a connected stream socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.sent = 0
        self.received = 0

    def send(self, p: ParameterSet) -> None:
        self.sock.sendall(encode_frame(p))
        self.sent += 1

    def recv(self) -> ParameterSet:
        (n,) = _LEN.unpack(_recv_exact(self.sock, _LEN.size))
        self.received += 1
        return ParameterSet.from_bytes(_recv_exact(self.sock, n))

    def close(self) -> None:
        self.sock.close()


TRANSPORTS = ("inprocess", "stream")


def make_link(kind: str = "inprocess"):
    """Return ``(server_end, client_end)`` of a fresh duplex link."""
    if kind == "inprocess":
        a, b = deque(), deque()
        return InProcessEnd(a, b), InProcessEnd(b, a)
    if kind == "stream":
        s1, s2 = socket.socketpair()
        return StreamEnd(s1), StreamEnd(s2)
    raise ValueError(f"unknown transport {kind!r}; choose from {TRANSPORTS}")
