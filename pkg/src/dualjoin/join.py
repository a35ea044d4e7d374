"""Two-party join orchestration.

Order of work for each party::

    handshake  HELLO both ways (sizes, ring width, version); not a round
    offline    sample permutations, mask and key locally
    setup      shuffle and encrypt own identifiers (local)
    offline    dealer exchange: B ships its dealer inputs, A's co-located
               dealer answers with B's correlation halves
    smig       three online rounds -> mapped pairs
    misfa      one online round -> joined-table share

The dealer exchange runs after both setups, so it doubles as the barrier that
keeps online traffic from starting before both parties finished setup.

The trusted dealer is hosted in A's process. It sees B's first permutation
and B's mask, which a real offline shuffle protocol would hide; the protocol
code of party A never touches those values.
"""

from __future__ import annotations

import logging
import struct
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import group
from .errors import ParameterMismatchError, ProtocolError, ShapeError, TransportError
from .group import GroupScalar
from .misfa import FeatureCorrelations, JoinOutputShare, run_misfa
from .ring import Permutation, Ring, reconstruct, ring_of, sample_permutation
from .rng import Rng
from .shuffle import ReceiverHalf, SenderHalf, correlate
from .smig import SmigKeys, smig_online, smig_setup_party_a, smig_setup_party_b, validate_ids
from .transport import LoopbackTransport, MsgType, Transport

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
SIGMA = 256
ONLINE_PHASES = ("smig", "misfa")
_HELLO = struct.Struct("<HBHQQ")
_ROLES = {"a": 0, "b": 1}


@dataclass(frozen=True)
class PartyTable:
    ids: tuple[bytes, ...]
    features: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(bytes(i) for i in self.ids))
        if self.features.ndim != 2:
            raise ShapeError("features must be a 2-D ring matrix")
        if self.features.shape[0] != len(self.ids):
            raise ShapeError(f"{len(self.ids)} identifiers but {self.features.shape[0]} feature rows")
        ring_of(self.features)
        validate_ids(self.ids)

    @classmethod
    def from_rows(cls, ids: Sequence[bytes | str], rows, ring: Ring = Ring(), m: int | None = None) -> PartyTable:
        ids = tuple(i.encode() if isinstance(i, str) else bytes(i) for i in ids)
        if m is None:
            m = len(rows[0]) if len(rows) else 0
        return cls(ids, ring.asarray(rows, (len(ids), m)))

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class JoinConfig:
    """Per-party run parameters.

    ``n_a``..``m_b`` are optional expectations about the public sizes; when
    set, the HELLO exchange aborts if the peer announces something else.
    """

    role: str
    ell: int = 64
    seed: int | bytes | str | None = None
    n_a: int | None = None
    n_b: int | None = None
    m_a: int | None = None
    m_b: int | None = None
    sigma: int = SIGMA
    endpoint: str | None = None

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ValueError(f"role must be 'a' or 'b', got {self.role!r}")
        Ring(self.ell)
        if self.sigma != SIGMA:
            raise ValueError(f"sigma is fixed at {SIGMA}")
        for name in ("n_a", "n_b"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("m_a", "m_b"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class OfflineMaterial:
    """Input-independent randomness of one party.

    For A: ``first`` = pa1 on range(n_a), ``second`` = pa2 on range(n_b),
    ``mask`` is n_a x m_a. For B: ``first`` = pb1 on range(n_a),
    ``second`` = pb2 on range(n_b), ``mask`` is n_b x m_b.
    """

    first: Permutation
    second: Permutation
    mask: np.ndarray
    key: GroupScalar


@dataclass
class RunStats:
    role: str
    n_a: int
    n_b: int
    m_a: int
    m_b: int
    ell: int
    c: int
    phases: dict[str, dict[str, float]]
    sent_types: dict[str, int]
    received_types: dict[str, int]
    setup_done_at: float = 0.0
    online_started_at: float = 0.0

    @property
    def online_payload_bytes(self) -> int:
        """Payload bytes of all online flights, both directions."""
        return int(sum(self.phases.get(p, {}).get("bytes_sent", 0) + self.phases.get(p, {}).get("bytes_received", 0)
                       for p in ONLINE_PHASES))

    @property
    def online_rounds(self) -> int:
        return int(sum(self.phases.get(p, {}).get("rounds", 0) for p in ONLINE_PHASES))

    def rounds(self, phase: str) -> int:
        return int(self.phases.get(phase, {}).get("rounds", 0))

    def to_record(self) -> dict[str, int | float | str]:
        rec: dict[str, int | float | str] = {
            "role": self.role, "n_a": self.n_a, "n_b": self.n_b, "m_a": self.m_a,
            "m_b": self.m_b, "ell": self.ell, "sigma": SIGMA, "c": self.c,
        }
        for phase, vals in sorted(self.phases.items()):
            for k, v in vals.items():
                rec[f"{phase}.{k}"] = v
            rec[f"{phase}.messages"] = vals.get("messages_sent", 0) + vals.get("messages_received", 0)
        online: Counter = Counter()
        for phase in ONLINE_PHASES:
            online.update({k: v for k, v in self.phases.get(phase, {}).items() if k != "wall_ms"})
        for k, v in sorted(online.items()):
            rec[f"online.{k}"] = v
        rec["online.payload_bytes_total"] = self.online_payload_bytes
        for k, v in sorted(self.sent_types.items()):
            rec[f"msg.sent.{k}"] = v
        for k, v in sorted(self.received_types.items()):
            rec[f"msg.received.{k}"] = v
        return rec


def _hello(transport: Transport, cfg: JoinConfig, table: PartyTable) -> tuple[int, int, int, int]:
    transport.send(MsgType.HELLO, _HELLO.pack(PROTOCOL_VERSION, _ROLES[cfg.role], cfg.ell, table.n, table.m))
    buf = transport.recv(MsgType.HELLO).payload
    if len(buf) != _HELLO.size:
        raise ProtocolError(f"HELLO payload has {len(buf)} bytes, expected {_HELLO.size}")
    version, peer_role, peer_ell, peer_n, peer_m = _HELLO.unpack(buf)
    problems = []
    if version != PROTOCOL_VERSION:
        problems.append(f"protocol version {version} != {PROTOCOL_VERSION}")
    if peer_role == _ROLES[cfg.role]:
        problems.append(f"both parties claim role {cfg.role!r}")
    if peer_ell != cfg.ell:
        problems.append(f"ring width {peer_ell} != {cfg.ell}")
    if peer_n < 1:
        problems.append("peer announced an empty table")
    if cfg.role == "a":
        n_a, m_a, n_b, m_b = table.n, table.m, peer_n, peer_m
    else:
        n_a, m_a, n_b, m_b = peer_n, peer_m, table.n, table.m
    for name, actual in (("n_a", n_a), ("n_b", n_b), ("m_a", m_a), ("m_b", m_b)):
        expected = getattr(cfg, name)
        if expected is not None and expected != actual:
            problems.append(f"{name} is {actual}, configuration expects {expected}")
    if problems:
        raise ParameterMismatchError("; ".join(problems))
    return n_a, n_b, m_a, m_b


def sample_material(role: str, n_a: int, n_b: int, m_own: int, ring: Ring, rng: Rng) -> OfflineMaterial:
    first = sample_permutation(n_a, rng.derive("perm.first"))
    second = sample_permutation(n_b, rng.derive("perm.second"))
    rows = n_a if role == "a" else n_b
    mask = ring.random(rows, m_own, rng.derive("mask"))
    key = group.keygen(rng.derive("key"))
    return OfflineMaterial(first, second, mask, key)


def _check_material(role: str, mat: OfflineMaterial, n_a: int, n_b: int, m_own: int, ring: Ring) -> None:
    rows = n_a if role == "a" else n_b
    if mat.first.n != n_a or mat.second.n != n_b:
        raise ShapeError(f"offline permutations have sizes {mat.first.n}/{mat.second.n}, need {n_a}/{n_b}")
    if mat.mask.shape != (rows, m_own) or mat.mask.dtype != ring.dtype:
        raise ShapeError(f"offline mask is {mat.mask.shape} {mat.mask.dtype}, need {(rows, m_own)} {ring.dtype}")


def _perm_bytes(p: Permutation) -> bytes:
    return p.mapping.astype("<u8").tobytes()


def _perm_from_bytes(buf: bytes, n: int) -> Permutation:
    if len(buf) != 8 * n:
        raise ProtocolError(f"permutation payload has {len(buf)} bytes, expected {8 * n}")
    try:
        return Permutation(np.frombuffer(buf, dtype="<u8").astype(np.int64))
    except ValueError as exc:
        raise ProtocolError(f"invalid permutation: {exc}") from None


def _offline_exchange(role: str, mat: OfflineMaterial, n_a: int, n_b: int, m_a: int, m_b: int, ring: Ring,
                      rng: Rng, transport: Transport,
                      dealer_pins: Mapping[str, np.ndarray] | None) -> FeatureCorrelations:
    eb = ring.elem_bytes
    if role == "b":
        transport.send(MsgType.OFFLINE_DEALER_IN, _perm_bytes(mat.first) + ring.encode(mat.mask))
        transport.round_barrier("offline dealer inputs B->A")
        buf = transport.recv(MsgType.OFFLINE_DEALER_OUT).payload
        transport.round_barrier("offline dealer outputs A->B")
        split = n_a * m_a * eb
        if len(buf) != split + n_b * m_b * eb:
            raise ProtocolError("OFFLINE_DEALER_OUT has the wrong size")
        recv_share = ring.decode(buf[:split], n_a, m_a)
        send_share = ring.decode(buf[split:], n_b, m_b)
        return FeatureCorrelations(send=SenderHalf(mat.mask, send_share), receive=ReceiverHalf(mat.first, recv_share))

    buf = transport.recv(MsgType.OFFLINE_DEALER_IN).payload
    transport.round_barrier("offline dealer inputs B->A")
    if len(buf) != 8 * n_a + n_b * m_b * eb:
        raise ProtocolError("OFFLINE_DEALER_IN has the wrong size")
    pb1 = _perm_from_bytes(buf[:8 * n_a], n_a)
    mask_b = ring.decode(buf[8 * n_a:], n_b, m_b)
    pins = dealer_pins or {}
    dealer_rng = rng.derive("dealer")
    a_to_b = correlate(mat.mask, pb1, dealer_rng, pins.get("a_to_b"))
    b_to_a = correlate(mask_b, mat.second, dealer_rng, pins.get("b_to_a"))
    transport.send(MsgType.OFFLINE_DEALER_OUT, ring.encode(a_to_b.receiver.share) + ring.encode(b_to_a.sender.share))
    transport.round_barrier("offline dealer outputs A->B")
    return FeatureCorrelations(send=a_to_b.sender, receive=b_to_a.receiver)


def run_join(cfg: JoinConfig, table: PartyTable, transport: Transport, *,
             material: OfflineMaterial | None = None,
             dealer_pins: Mapping[str, np.ndarray] | None = None,
             trace: dict | None = None) -> tuple[JoinOutputShare, RunStats]:
    """Run one party of the join and return its share and traffic statistics.

    ``material`` replaces locally sampled offline randomness and
    ``dealer_pins`` fixes the dealer's sender shares (keys ``"a_to_b"`` and
    ``"b_to_a"``; only consulted on A). Both exist for fixture replay.
    ``trace`` collects intermediate values (pairs, feature shares) for tests.
    """
    ring = Ring(cfg.ell)
    if table.features.dtype != ring.dtype:
        raise ShapeError(f"table features are {table.features.dtype}, configuration uses Z_2^{cfg.ell}")
    role = cfg.role
    rng = Rng(cfg.seed)

    with transport.phase("handshake"):
        n_a, n_b, m_a, m_b = _hello(transport, cfg, table)
    log.info("party %s: n_a=%d n_b=%d m_a=%d m_b=%d ell=%d", role, n_a, n_b, m_a, m_b, cfg.ell)
    m_own = m_a if role == "a" else m_b

    with transport.phase("offline"):
        if material is None:
            material = sample_material(role, n_a, n_b, m_own, ring, rng.derive("offline"))
        _check_material(role, material, n_a, n_b, m_own, ring)

    with transport.phase("setup"):
        if role == "a":
            prepared = smig_setup_party_a(table.ids, material.first, material.key)
        else:
            prepared = smig_setup_party_b(table.ids, material.second, material.key)
    setup_done_at = time.monotonic()

    with transport.phase("offline"):
        corr = _offline_exchange(role, material, n_a, n_b, m_a, m_b, ring, rng, transport, dealer_pins)

    keys = SmigKeys(material.first, material.second, material.key)
    online_started_at = time.monotonic()
    with transport.phase("smig"):
        mip = smig_online(role, prepared, keys, n_a, n_b, transport)
    if trace is not None:
        trace["mipairs"] = mip

    local_perm = material.first if role == "a" else material.second
    partner_rows, partner_cols = (n_b, m_b) if role == "a" else (n_a, m_a)
    with transport.phase("misfa"):
        share = run_misfa(role, table.features, local_perm, corr, mip, partner_rows, partner_cols, transport,
                          trace)

    acc = transport.accounting
    stats = RunStats(
        role=role, n_a=n_a, n_b=n_b, m_a=m_a, m_b=m_b, ell=cfg.ell, c=len(mip),
        phases={name: dict(vars(ps)) for name, ps in acc.phases.items()},
        sent_types=dict(acc.sent_types), received_types=dict(acc.received_types),
        setup_done_at=setup_done_at, online_started_at=online_started_at,
    )
    return share, stats


@dataclass
class LoopbackResult:
    share_a: JoinOutputShare
    share_b: JoinOutputShare
    stats_a: RunStats
    stats_b: RunStats
    transport_a: LoopbackTransport = field(repr=False)
    transport_b: LoopbackTransport = field(repr=False)
    trace_a: dict = field(default_factory=dict, repr=False)
    trace_b: dict = field(default_factory=dict, repr=False)

    def reconstruct(self) -> np.ndarray:
        return reconstruct(self.share_a.data, self.share_b.data)


def run_loopback(table_a: PartyTable, table_b: PartyTable, *, ell: int = 64,
                 seed_a=None, seed_b=None,
                 material_a: OfflineMaterial | None = None, material_b: OfflineMaterial | None = None,
                 dealer_pins: Mapping[str, np.ndarray] | None = None,
                 timeout: float | None = 120.0) -> LoopbackResult:
    """Both parties on two threads of this process over an in-memory duplex pair."""
    ta, tb = LoopbackTransport.pair(timeout=timeout)
    traces: dict[str, dict] = {"a": {}, "b": {}}
    jobs = {
        "a": (JoinConfig("a", ell, seed_a), table_a, ta, material_a, dealer_pins),
        "b": (JoinConfig("b", ell, seed_b), table_b, tb, material_b, None),
    }
    results: dict[str, tuple] = {}
    errors: dict[str, BaseException] = {}

    def work(role):
        cfg, table, tr, mat, pins = jobs[role]
        try:
            results[role] = run_join(cfg, table, tr, material=mat, dealer_pins=pins, trace=traces[role])
        except BaseException as exc:  # surfaced below
            errors[role] = exc
            tr.close()

    threads = [threading.Thread(target=work, args=(r,), name=f"party-{r}") for r in ("a", "b")]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        # prefer the root cause over the peer's "channel closed"
        primary = next((e for e in errors.values() if not isinstance(e, TransportError)), None)
        raise primary or next(iter(errors.values()))
    (sa, st_a), (sb, st_b) = results["a"], results["b"]
    return LoopbackResult(sa, sb, st_a, st_b, ta, tb, traces["a"], traces["b"])


def plaintext_join_oracle(table_a: PartyTable, table_b: PartyTable) -> np.ndarray:
    """Inner join on identifiers, rows ordered by identifier bytes."""
    pos_b = {ident: j for j, ident in enumerate(table_b.ids)}
    common = sorted((ident, i, pos_b[ident]) for i, ident in enumerate(table_a.ids) if ident in pos_b)
    ia = np.array([i for _, i, _ in common], dtype=np.int64)
    ib = np.array([j for _, _, j in common], dtype=np.int64)
    return np.concatenate([table_a.features[ia], table_b.features[ib]], axis=1)


@dataclass
class VerifyReport:
    ok: bool
    rows: int
    expected_rows: int
    unexpected: list[tuple[int, tuple[int, ...]]]  # (row index in reconstruction, row)
    missing: list[tuple[int, ...]]

    def describe(self) -> str:
        if self.ok:
            return f"PASS: {self.rows} joined rows match the plaintext join"
        lines = [f"FAIL: reconstructed {self.rows} rows, plaintext join has {self.expected_rows}"]
        for idx, row in self.unexpected[:20]:
            lines.append(f"  unexpected row {idx}: {list(row)}")
        for row in self.missing[:20]:
            lines.append(f"  missing row: {list(row)}")
        hidden = max(0, len(self.unexpected) - 20) + max(0, len(self.missing) - 20)
        if hidden:
            lines.append(f"  ... {hidden} more")
        return "\n".join(lines)


def verify_join(share_a: np.ndarray | JoinOutputShare, share_b: np.ndarray | JoinOutputShare,
                table_a: PartyTable, table_b: PartyTable) -> VerifyReport:
    """Multiset comparison of the reconstructed shares against the oracle."""
    if isinstance(share_a, JoinOutputShare):
        share_a = share_a.data
    if isinstance(share_b, JoinOutputShare):
        share_b = share_b.data
    recon = reconstruct(share_a, share_b)
    oracle = plaintext_join_oracle(table_a, table_b)
    if recon.shape[1] != oracle.shape[1]:
        raise ShapeError(f"shares have {recon.shape[1]} columns, tables imply {oracle.shape[1]}")
    want = Counter(map(tuple, oracle.tolist()))
    have_rows = list(map(tuple, recon.tolist()))
    budget = Counter(want)
    unexpected = []
    for idx, row in enumerate(have_rows):
        if budget[row] > 0:
            budget[row] -= 1
        else:
            unexpected.append((idx, row))
    missing = [row for row, k in budget.items() for _ in range(k)]
    return VerifyReport(not unexpected and not missing, len(have_rows), oracle.shape[0], unexpected, missing)

