"""UDP multicast transport: timed trace replay and tick subscription.

Wire format: each tick travels in its own datagram as a 4-byte little-endian
sequence number followed by the canonical CSV payload.  Datagrams decode in
isolation; the sequence prefix lets receivers count losses (UDP offers no
retransmission).
"""

from __future__ import annotations

import socket
import struct
import time
from dataclasses import dataclass

from .trace import MarketTick, TickTrace, TraceParseError, parse_tick_line, serialize_tick

DEFAULT_GROUP = "239.255.0.1"
DEFAULT_PORT = 30001
DEFAULT_JITTER_BUDGET_S = 0.005

_SEQ = struct.Struct("<I")


def encode_datagram(tick: MarketTick) -> bytes:
    return _SEQ.pack(tick.seq & 0xFFFFFFFF) + serialize_tick(tick).encode("ascii")


def decode_datagram(data: bytes) -> MarketTick:
    if len(data) < _SEQ.size + 1:
        raise TraceParseError(f"datagram too short ({len(data)} bytes)")
    (seq,) = _SEQ.unpack_from(data)
    line = data[_SEQ.size:].decode("ascii", errors="strict")
    return parse_tick_line(line, seq=seq)


@dataclass
class ReplayStats:
    sent: int = 0
    max_lateness_ns: int = 0
    late: int = 0  # sends later than schedule by more than the budget
    duration_ns: int = 0


def _tx_socket(interface: str) -> socket.socket:
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM, socket.IPPROTO_UDP)
    sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_TTL, 1)
    sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_LOOP, 1)
    sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_IF,
                    socket.inet_aton(interface))
    return sock


def replay(trace: TickTrace, group: str = DEFAULT_GROUP, port: int = DEFAULT_PORT,
           speed: float = 1.0, *, burst: bool = False,
           interface: str = "127.0.0.1",
           jitter_budget_s: float = DEFAULT_JITTER_BUDGET_S) -> ReplayStats:
    """Transmit a trace onto a multicast group, preserving inter-arrival times.

    Tick i is sent no earlier than t_i/speed after replay start, using an
    absolute schedule (sleep until start + t_i/speed) so jitter does not
    accumulate over long sessions.  ``burst`` ignores the schedule and sends
    back-to-back.  Lateness beyond the jitter budget increments a warning
    counter but never fails the replay.
    """
    if len(trace) == 0:
        raise ValueError("cannot replay an empty trace")
    if speed <= 0:
        raise ValueError(f"speed must be positive, got {speed}")
    stats = ReplayStats()
    budget_ns = int(jitter_budget_s * 1e9)
    sock = _tx_socket(interface)
    try:
        start = time.monotonic_ns()
        for tick in trace:
            if not burst:
                target = start + int(tick.timestamp_ns / speed)
                now = time.monotonic_ns()
                while now < target:
                    time.sleep(min((target - now) / 1e9, 0.05))
                    now = time.monotonic_ns()
                lateness = now - target
                if lateness > stats.max_lateness_ns:
                    stats.max_lateness_ns = lateness
                if lateness > budget_ns:
                    stats.late += 1
            sock.sendto(encode_datagram(tick), (group, port))
            stats.sent += 1
        stats.duration_ns = time.monotonic_ns() - start
    finally:
        sock.close()
    return stats


class Subscription:
    """A joined multicast group delivering decoded ticks to one consumer.

    Iteration yields ticks in receipt order and stops after ``idle_timeout``
    seconds without traffic (or on close()).  Sequence-number gaps and
    undecodable datagrams are counted, not raised.
    """

    def __init__(self, group: str = DEFAULT_GROUP, port: int = DEFAULT_PORT, *,
                 interface: str = "127.0.0.1",
                 idle_timeout: float | None = None):
        self.group = group
        self.port = port
        self.gap_count = 0
        self.malformed_count = 0
        self.received = 0
        self._last_seq: int | None = None
        self._idle_timeout = idle_timeout
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM, socket.IPPROTO_UDP)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((group, port))
            mreq = struct.pack("4s4s", socket.inet_aton(group),
                               socket.inet_aton(interface))
            sock.setsockopt(socket.IPPROTO_IP, socket.IP_ADD_MEMBERSHIP, mreq)
        except OSError:
            sock.close()
            raise
        self._sock = sock

    def close(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __iter__(self):
        return self

    def __next__(self) -> MarketTick:
        tick = self.recv(self._idle_timeout)
        if tick is None:
            raise StopIteration
        return tick

    def recv(self, timeout: float | None = None) -> MarketTick | None:
        """Receive the next decodable tick, or None on timeout/close."""
        while True:
            if self._sock is None:
                return None
            self._sock.settimeout(timeout)
            try:
                data, _ = self._sock.recvfrom(65536)
            except socket.timeout:
                return None
            except OSError:
                return None
            try:
                tick = decode_datagram(data)
            except (TraceParseError, UnicodeDecodeError):
                self.malformed_count += 1
                continue
            if self._last_seq is not None and tick.seq > self._last_seq + 1:
                self.gap_count += tick.seq - self._last_seq - 1
            self._last_seq = tick.seq
            self.received += 1
            return tick


def subscribe(group: str = DEFAULT_GROUP, port: int = DEFAULT_PORT, *,
              interface: str = "127.0.0.1",
              idle_timeout: float | None = None) -> Subscription:
    """Join a multicast group and return the tick stream."""
    return Subscription(group, port, interface=interface,
                        idle_timeout=idle_timeout)
