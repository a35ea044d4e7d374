"""Framed message transport with byte, message and round accounting.

Wire format of a frame: ``[msg_type:1][payload_len:8 LE][payload]``.

Two realizations share one accounting core: an in-process duplex pair built
on queues, and TCP. Both let ``send`` return before the peer reads, so the
two parties can push their masked matrices at the same time without
deadlocking.
"""

from __future__ import annotations

import enum
import logging
import queue
import socket
import struct
import threading
import time
from collections import Counter, defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field

from .errors import FrameError, ProtocolError, TransportError

log = logging.getLogger(__name__)

HEADER = struct.Struct("<BQ")
HEADER_BYTES = HEADER.size
MAX_PAYLOAD = 2**32


class MsgType(enum.IntEnum):
    HELLO = 0x01
    OFFLINE_DEALER_IN = 0x10
    OFFLINE_DEALER_OUT = 0x11
    SMIG_MSG1 = 0x21
    SMIG_MSG2 = 0x22
    SMIG_MSG3 = 0x23
    MISFA_MASKED_A = 0x31
    MISFA_MASKED_B = 0x32


@dataclass(frozen=True)
class Frame:
    msg_type: MsgType
    payload: bytes

    def encode(self) -> bytes:
        return encode_frame(self.msg_type, self.payload)


def encode_frame(msg_type: int, payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise FrameError(f"payload of {len(payload)} bytes exceeds the {MAX_PAYLOAD}-byte limit")
    return HEADER.pack(_msg_type(msg_type), len(payload)) + payload


def decode_header(buf: bytes) -> tuple[MsgType, int]:
    if len(buf) != HEADER_BYTES:
        raise FrameError(f"short frame header ({len(buf)} bytes)")
    raw_type, length = HEADER.unpack(buf)
    if length > MAX_PAYLOAD:
        raise FrameError(f"announced payload of {length} bytes exceeds the limit")
    return _msg_type(raw_type), length


def decode_frame(buf: bytes) -> Frame:
    msg_type, length = decode_header(buf[:HEADER_BYTES])
    payload = buf[HEADER_BYTES:]
    if len(payload) != length:
        raise FrameError(f"frame announces {length} payload bytes, carries {len(payload)}")
    return Frame(msg_type, payload)


def _msg_type(raw: int) -> MsgType:
    try:
        return MsgType(raw)
    except ValueError:
        raise FrameError(f"unknown message type 0x{raw:02x}") from None


@dataclass
class PhaseStats:
    bytes_sent: int = 0
    bytes_received: int = 0
    header_bytes_sent: int = 0
    header_bytes_received: int = 0
    messages_sent: int = 0
    messages_received: int = 0
    rounds: int = 0
    wall_ms: float = 0.0


@dataclass
class Accounting:
    """Counters for one endpoint. Payload and header bytes are kept apart."""

    phases: dict[str, PhaseStats] = field(default_factory=lambda: defaultdict(PhaseStats))
    sent_types: Counter = field(default_factory=Counter)
    received_types: Counter = field(default_factory=Counter)
    round_labels: list[tuple[str, str]] = field(default_factory=list)
    first_frame_at: dict[str, float] = field(default_factory=dict)

    def total(self, *names: str) -> PhaseStats:
        out = PhaseStats()
        for name in names:
            ps = self.phases.get(name)
            if ps is None:
                continue
            for f in PhaseStats.__dataclass_fields__:
                setattr(out, f, getattr(out, f) + getattr(ps, f))
        return out


class Transport:
    """Base class: framing rules, accounting and phase bookkeeping."""

    def __init__(self, name: str = ""):
        self.name = name
        self.accounting = Accounting()
        self._phase = "unphased"
        self._lock = threading.Lock()

    @property
    def current_phase(self) -> str:
        return self._phase

    @contextmanager
    def phase(self, name: str):
        prev, self._phase = self._phase, name
        stats = self.accounting.phases[name]
        t0 = time.perf_counter()
        try:
            yield stats
        finally:
            stats.wall_ms += (time.perf_counter() - t0) * 1e3
            self._phase = prev

    def round_barrier(self, label: str) -> None:
        """Close one round of the current phase.

        A round is a maximal set of flights neither side has to wait for;
        two simultaneous full-duplex flights close a single round.
        """
        self.accounting.phases[self._phase].rounds += 1
        self.accounting.round_labels.append((self._phase, label))

    def send(self, msg_type: MsgType, payload: bytes = b"") -> None:
        data = encode_frame(msg_type, payload)
        with self._lock:
            ps = self.accounting.phases[self._phase]
            ps.bytes_sent += len(payload)
            ps.header_bytes_sent += HEADER_BYTES
            ps.messages_sent += 1
            self.accounting.sent_types[MsgType(msg_type).name] += 1
            self.accounting.first_frame_at.setdefault(self._phase, time.monotonic())
        log.debug("%s -> %s (%d bytes) [%s]", self.name, MsgType(msg_type).name, len(payload), self._phase)
        self._send_raw(MsgType(msg_type), data)

    def recv(self, expected: MsgType | None = None) -> Frame:
        frame = self._recv_raw()
        with self._lock:
            ps = self.accounting.phases[self._phase]
            ps.bytes_received += len(frame.payload)
            ps.header_bytes_received += HEADER_BYTES
            ps.messages_received += 1
            self.accounting.received_types[frame.msg_type.name] += 1
        log.debug("%s <- %s (%d bytes) [%s]", self.name, frame.msg_type.name, len(frame.payload), self._phase)
        if expected is not None and frame.msg_type != expected:
            raise ProtocolError(f"expected {expected.name}, received {frame.msg_type.name}")
        return frame

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _send_raw(self, msg_type: MsgType, data: bytes) -> None:
        raise NotImplementedError

    def _recv_raw(self) -> Frame:
        raise NotImplementedError


class TranscriptLog:
    """Global event order for an in-process pair (test oracle for rounds)."""

    def __init__(self):
        self._lock = threading.Lock()
        self.events: list[tuple[str, str, str, str]] = []  # (party, "send"/"recv", phase, type)

    def record(self, party: str, kind: str, phase: str, msg_type: str) -> None:
        with self._lock:
            self.events.append((party, kind, phase, msg_type))

    def causal_rounds(self, phase: str) -> int:
        """Longest chain of causally dependent flights within ``phase``.

        A flight's depth is one more than the deepest same-phase flight its
        sender had already consumed when sending it. Channels are FIFO, so
        the k-th frame a party receives is the k-th frame its peer sent.
        """
        events = [e for e in self.events if e[2] == phase]
        parties = {e[0] for e in self.events}
        sent_depths: dict[str, list[int]] = defaultdict(list)
        consumed: dict[str, int] = defaultdict(int)
        received: Counter = Counter()
        for party, kind, _, _ in events:
            if kind == "send":
                sent_depths[party].append(consumed[party] + 1)
            else:
                (peer,) = parties - {party}
                d = sent_depths[peer][received[party]]
                received[party] += 1
                consumed[party] = max(consumed[party], d)
        return max((d for ds in sent_depths.values() for d in ds), default=0)


class LoopbackTransport(Transport):
    """One end of an in-process duplex channel. Sends never block."""

    def __init__(self, name: str, inbox: queue.Queue, outbox: queue.Queue,
                 transcript: TranscriptLog | None = None, timeout: float | None = 60.0):
        super().__init__(name)
        self._inbox = inbox
        self._outbox = outbox
        self._transcript = transcript
        self._timeout = timeout
        self._closed = False

    @classmethod
    def pair(cls, timeout: float | None = 60.0) -> tuple[LoopbackTransport, LoopbackTransport]:
        ab: queue.Queue = queue.Queue()
        ba: queue.Queue = queue.Queue()
        log_ = TranscriptLog()
        return (cls("alice", ba, ab, log_, timeout), cls("bob", ab, ba, log_, timeout))

    @property
    def transcript(self) -> TranscriptLog | None:
        return self._transcript

    def _send_raw(self, msg_type: MsgType, data: bytes) -> None:
        if self._closed:
            raise TransportError("send on a closed loopback transport")
        if self._transcript is not None:
            self._transcript.record(self.name, "send", self._phase, msg_type.name)
        self._outbox.put(data)

    def _recv_raw(self) -> Frame:
        try:
            data = self._inbox.get(timeout=self._timeout)
        except queue.Empty:
            raise TransportError(f"{self.name}: timed out waiting for a frame") from None
        if data is None:
            raise TransportError(f"{self.name}: peer closed the channel")
        frame = decode_frame(data)
        if self._transcript is not None:
            self._transcript.record(self.name, "recv", self._phase, frame.msg_type.name)
        return frame

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(None)


class TcpTransport(Transport):
    """Frames over a TCP stream with a dedicated writer thread.

    ``send`` hands the frame to the writer and returns, so a peer that is
    itself blocked in ``send`` cannot stall us.
    """

    def __init__(self, sock: socket.socket, name: str = "tcp", timeout: float | None = 300.0):
        super().__init__(name)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        sock.settimeout(timeout)
        self._sock = sock
        self._outq: queue.Queue = queue.Queue()
        self._send_error: BaseException | None = None
        self._writer = threading.Thread(target=self._write_loop, name=f"{name}-writer", daemon=True)
        self._writer.start()
        self._closed = False

    @classmethod
    def listen(cls, host: str, port: int, name: str = "tcp", timeout: float | None = 300.0,
               ready: threading.Event | None = None, bound: list | None = None) -> TcpTransport:
        srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            srv.bind((host, port))
            srv.listen(1)
            srv.settimeout(timeout)
            if bound is not None:
                bound.append(srv.getsockname()[1])
            if ready is not None:
                ready.set()
            conn, peer = srv.accept()
        except OSError as exc:
            raise TransportError(f"listen on {host}:{port} failed: {exc}") from exc
        finally:
            srv.close()
        log.info("%s accepted connection from %s:%d", name, *peer[:2])
        return cls(conn, name, timeout)

    @classmethod
    def connect(cls, host: str, port: int, name: str = "tcp", timeout: float | None = 300.0,
                retry_for: float = 10.0) -> TcpTransport:
        deadline = time.monotonic() + retry_for
        while True:
            try:
                sock = socket.create_connection((host, port), timeout=timeout)
                return cls(sock, name, timeout)
            except OSError as exc:
                if time.monotonic() >= deadline:
                    raise TransportError(f"connect to {host}:{port} failed: {exc}") from exc
                time.sleep(0.05)

    def _write_loop(self) -> None:
        while True:
            data = self._outq.get()
            if data is None:
                return
            try:
                self._sock.sendall(data)
            except OSError as exc:
                self._send_error = exc
                return

    def _send_raw(self, msg_type: MsgType, data: bytes) -> None:
        if self._closed:
            raise TransportError("send on a closed TCP transport")
        if self._send_error is not None:
            raise TransportError(f"earlier send failed: {self._send_error}")
        self._outq.put(data)

    def _read_exact(self, n: int) -> bytes:
        chunks = bytearray()
        while len(chunks) < n:
            try:
                chunk = self._sock.recv(min(n - len(chunks), 1 << 20))
            except OSError as exc:
                raise TransportError(f"receive failed: {exc}") from exc
            if not chunk:
                raise TransportError("peer closed the connection")
            chunks += chunk
        return bytes(chunks)

    def _recv_raw(self) -> Frame:
        msg_type, length = decode_header(self._read_exact(HEADER_BYTES))
        return Frame(msg_type, self._read_exact(length))

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        self._outq.put(None)
        self._writer.join()
        try:
            self._sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass
        self._sock.close()
        if self._send_error is not None:
            raise TransportError(f"send failed: {self._send_error}")
