"""Secure mapped intersection generation.

Party A shuffles its identifiers with its first permutation and encrypts them
under its key; party B shuffles A's ciphertexts again with its own first
permutation and adds its key. After A strips its own key, both A's doubly
shuffled vector and B's own shuffled vector carry identifiers encrypted
under B's key alone, so A can match them by encoding and emit index pairs in
the two composite orders without ever learning which identifiers matched.

Online flights (three rounds):

    A -> B  SMIG_MSG1  alpha*H(pa1(ID_a))                  n_a points
    B -> A  SMIG_MSG2  beta*alpha*H(p1(ID_a)) | beta*H(pb2(ID_b))   n_a + n_b points
    A -> B  SMIG_MSG3  mapped pairs                        c * 16 bytes

With unequal row counts, both first permutations act on range(n_a) and both
second permutations on range(n_b).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import group
from .errors import DuplicateIdentifierError, ProtocolError, ShapeError
from .group import GroupScalar
from .ring import Permutation, apply_permutation
from .transport import MsgType, Transport

MAX_ID_BYTES = 64


@dataclass(frozen=True)
class EncryptedIdVector:
    """Point encodings plus a human-readable note of what has been applied."""

    points: tuple[bytes, ...]
    tag: str = ""

    def __len__(self) -> int:
        return len(self.points)

    def to_bytes(self) -> bytes:
        return b"".join(self.points)

    @classmethod
    def from_bytes(cls, buf: bytes, count: int, tag: str = "") -> EncryptedIdVector:
        return cls(tuple(group.split_points(buf, count)), tag)


@dataclass(frozen=True)
class MIPairs:
    """Mapped intersection index pairs, 0-based, ascending by first entry."""

    pairs: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def first(self) -> np.ndarray:
        return np.fromiter((p[0] for p in self.pairs), dtype=np.int64, count=len(self.pairs))

    @property
    def second(self) -> np.ndarray:
        return np.fromiter((p[1] for p in self.pairs), dtype=np.int64, count=len(self.pairs))

    def one_based(self) -> list[tuple[int, int]]:
        return [(i + 1, j + 1) for i, j in self.pairs]

    def to_bytes(self) -> bytes:
        return np.asarray(self.pairs, dtype="<u8").reshape(-1).tobytes()

    @classmethod
    def from_bytes(cls, buf: bytes, n_a: int, n_b: int) -> MIPairs:
        if len(buf) % 16:
            raise ProtocolError(f"pair payload of {len(buf)} bytes is not a multiple of 16")
        flat = np.frombuffer(buf, dtype="<u8").astype(np.int64)
        pairs = tuple(map(tuple, flat.reshape(-1, 2).tolist()))
        mip = cls(pairs)
        mip.validate(n_a, n_b)
        return mip

    def validate(self, n_a: int, n_b: int) -> None:
        firsts, seconds = self.first, self.second
        if len(self) > min(n_a, n_b):
            raise ProtocolError(f"{len(self)} pairs exceed min(n_a, n_b) = {min(n_a, n_b)}")
        if len(self) == 0:
            return
        if firsts.min() < 0 or firsts.max() >= n_a or seconds.min() < 0 or seconds.max() >= n_b:
            raise ProtocolError("pair index out of range")
        if np.any(np.diff(firsts) <= 0):
            raise ProtocolError("pairs are not strictly ascending by first entry")
        if np.unique(seconds).size != seconds.size:
            raise ProtocolError("second entries repeat")


def validate_ids(ids: Sequence[bytes]) -> None:
    seen = set()
    for pos, ident in enumerate(ids):
        if not isinstance(ident, (bytes, bytearray)):
            raise TypeError(f"identifier at row {pos} is {type(ident).__name__}, expected bytes")
        if not 1 <= len(ident) <= MAX_ID_BYTES:
            raise ValueError(f"identifier at row {pos} has {len(ident)} bytes; allowed 1..{MAX_ID_BYTES}")
        if ident in seen:
            raise DuplicateIdentifierError(f"identifier {bytes(ident)!r} appears more than once")
        seen.add(ident)


def _encrypt_shuffled(ids: Sequence[bytes], perm: Permutation, key: GroupScalar, tag: str) -> EncryptedIdVector:
    validate_ids(ids)
    if perm.n != len(ids):
        raise ShapeError(f"permutation of size {perm.n} for {len(ids)} identifiers")
    shuffled = apply_permutation(perm, list(ids))
    return EncryptedIdVector(tuple(group.mul_many(key, group.hash_many(shuffled))), tag)


def smig_setup_party_a(ids: Sequence[bytes], first_perm: Permutation, alpha: GroupScalar) -> EncryptedIdVector:
    """alpha*H(ids) in first_perm order."""
    return _encrypt_shuffled(ids, first_perm, alpha, "alpha.H(pa1(ID_a))")


def smig_setup_party_b(ids: Sequence[bytes], second_perm: Permutation, beta: GroupScalar) -> EncryptedIdVector:
    """beta*H(ids) in second_perm order."""
    return _encrypt_shuffled(ids, second_perm, beta, "beta.H(pb2(ID_b))")


def smig_reencrypt_and_shuffle(received: EncryptedIdVector, first_perm: Permutation,
                               beta: GroupScalar) -> EncryptedIdVector:
    if first_perm.n != len(received):
        raise ShapeError(f"permutation of size {first_perm.n} for {len(received)} points")
    shuffled = apply_permutation(first_perm, list(received.points))
    return EncryptedIdVector(tuple(group.mul_many(beta, shuffled)), "beta.alpha.H(p1(ID_a))")


def smig_strip_own_key(received: EncryptedIdVector, alpha: GroupScalar) -> EncryptedIdVector:
    inv = group.scalar_inverse(alpha)
    return EncryptedIdVector(tuple(group.mul_many(inv, received.points)), "beta.H(p1(ID_a))")


def build_mipairs(a_side: EncryptedIdVector, b_side: EncryptedIdVector, second_perm: Permutation) -> MIPairs:
    """Match beta*H(p1(ID_a)) against beta*H(pb2(ID_b)) by encoding.

    Index ``i`` of a match is already the composite-mapped A index; the B
    index ``j`` still needs A's second permutation on top of B's.
    """
    if second_perm.n != len(b_side):
        raise ShapeError(f"permutation of size {second_perm.n} for {len(b_side)} points")
    where_b: dict[bytes, int] = {}
    for j, p in enumerate(b_side.points):
        if where_b.setdefault(p, j) != j:
            raise DuplicateIdentifierError("two B-side ciphertexts collide (repeated identifier or hash failure)")
    if len(set(a_side.points)) != len(a_side):
        raise DuplicateIdentifierError("two A-side ciphertexts collide (repeated identifier or hash failure)")
    mapping = second_perm.mapping
    pairs = []
    for i, p in enumerate(a_side.points):
        j = where_b.get(p)
        if j is not None:
            pairs.append((i, int(mapping[j])))
    return MIPairs(tuple(pairs))


@dataclass(frozen=True)
class SmigKeys:
    """One party's offline permutations and key.

    For A, ``first``/``second`` are its pa1/pa2; for B they are pb1/pb2.
    """

    first: Permutation
    second: Permutation
    key: GroupScalar


def smig_online(role: str, prepared: EncryptedIdVector, keys: SmigKeys, n_a: int, n_b: int,
                transport: Transport) -> MIPairs:
    """Run the three online flights from an already computed setup vector."""
    if role == "a":
        transport.send(MsgType.SMIG_MSG1, prepared.to_bytes())
        transport.round_barrier("smig.1 A->B encrypted ids")

        buf = transport.recv(MsgType.SMIG_MSG2).payload
        if len(buf) != (n_a + n_b) * group.POINT_BYTES:
            raise ProtocolError(f"SMIG_MSG2 carries {len(buf)} bytes, expected {(n_a + n_b) * group.POINT_BYTES}")
        split = n_a * group.POINT_BYTES
        dual = EncryptedIdVector.from_bytes(buf[:split], n_a)
        b_side = EncryptedIdVector.from_bytes(buf[split:], n_b, "beta.H(pb2(ID_b))")
        group.validate_many(b_side.points)
        transport.round_barrier("smig.2 B->A dual-encrypted ids")

        a_side = smig_strip_own_key(dual, keys.key)
        mip = build_mipairs(a_side, b_side, keys.second)
        transport.send(MsgType.SMIG_MSG3, mip.to_bytes())
        transport.round_barrier("smig.3 A->B mapped pairs")
        return mip

    if role == "b":
        buf = transport.recv(MsgType.SMIG_MSG1).payload
        received = EncryptedIdVector.from_bytes(buf, n_a, "alpha.H(pa1(ID_a))")
        transport.round_barrier("smig.1 A->B encrypted ids")

        dual = smig_reencrypt_and_shuffle(received, keys.first, keys.key)
        transport.send(MsgType.SMIG_MSG2, dual.to_bytes() + prepared.to_bytes())
        transport.round_barrier("smig.2 B->A dual-encrypted ids")

        mip = MIPairs.from_bytes(transport.recv(MsgType.SMIG_MSG3).payload, n_a, n_b)
        transport.round_barrier("smig.3 A->B mapped pairs")
        return mip

    raise ValueError(f"role must be 'a' or 'b', got {role!r}")


def run_smig(role: str, ids: Sequence[bytes], keys: SmigKeys, n_a: int, n_b: int,
             transport: Transport) -> MIPairs:
    """Setup plus online phase for one party."""
    if role == "a":
        prepared = smig_setup_party_a(ids, keys.first, keys.key)
    elif role == "b":
        prepared = smig_setup_party_b(ids, keys.second, keys.key)
    else:
        raise ValueError(f"role must be 'a' or 'b', got {role!r}")
    with transport.phase("smig"):
        return smig_online(role, prepared, keys, n_a, n_b, transport)
