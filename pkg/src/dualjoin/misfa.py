"""Feature alignment driven by mapped intersection pairs.

Each party applies its local permutation to its own features and then runs
the sending side of one oblivious shuffle, whose receiving side applies the
partner's permutation. A's features end up shared in the order
pa1-then-pb1, B's in the order pb2-then-pa2, which are exactly the orders the
pair indices refer to. Both masked matrices cross the wire in the same round.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ProtocolError, ShapeError
from .ring import Permutation, Ring, apply_permutation, ring_of
from .shuffle import ReceiverHalf, SenderHalf, oshuffle_receive, oshuffle_send
from .smig import MIPairs
from .transport import MsgType, Transport


@dataclass(frozen=True)
class JoinOutputShare:
    """One party's share of the joined table: A's columns then B's."""

    data: np.ndarray
    m_a: int

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def m_b(self) -> int:
        return self.cols - self.m_a

    @property
    def ring(self) -> Ring:
        return ring_of(self.data)


def dual_shuffle_own_features(features: np.ndarray, local_perm: Permutation,
                              half: SenderHalf) -> tuple[np.ndarray, np.ndarray]:
    """Local first-layer shuffle, then the sender side of the oblivious shuffle."""
    return oshuffle_send(apply_permutation(local_perm, features), half)


def dual_shuffle_partner_features(masked: np.ndarray, half: ReceiverHalf) -> np.ndarray:
    return oshuffle_receive(masked, half)


def extract_joined(a_features: np.ndarray, b_features: np.ndarray, mip: MIPairs) -> JoinOutputShare:
    """Gather the matched rows; purely local."""
    if a_features.dtype != b_features.dtype:
        raise ShapeError("feature shares use different rings")
    first, second = mip.first, mip.second
    if len(mip) and (first.max() >= a_features.shape[0] or second.max() >= b_features.shape[0]):
        raise IndexError("pair index out of range for the feature shares")
    data = np.concatenate([a_features[first], b_features[second]], axis=1)
    return JoinOutputShare(data, a_features.shape[1])


@dataclass
class FeatureCorrelations:
    """The two correlation halves one party holds for the alignment phase."""

    send: SenderHalf      # masks this party's own features
    receive: ReceiverHalf  # applies this party's permutation to the partner's features


def run_misfa(role: str, features: np.ndarray, local_perm: Permutation, corr: FeatureCorrelations,
              mip: MIPairs, partner_rows: int, partner_cols: int, transport: Transport,
              trace: dict | None = None) -> JoinOutputShare:
    """Exchange both masked matrices in one round and extract the join share.

    ``local_perm`` is pa1 for A and pb2 for B. ``trace``, when given, receives
    this party's shares of both shuffled feature matrices.
    """
    if role not in ("a", "b"):
        raise ValueError(f"role must be 'a' or 'b', got {role!r}")
    ring = ring_of(features)
    own_type, peer_type = (
        (MsgType.MISFA_MASKED_A, MsgType.MISFA_MASKED_B) if role == "a"
        else (MsgType.MISFA_MASKED_B, MsgType.MISFA_MASKED_A)
    )
    masked, own_share = dual_shuffle_own_features(features, local_perm, corr.send)
    # send before receiving: both flights are in the air at once
    transport.send(own_type, ring.encode(masked))
    buf = transport.recv(peer_type).payload
    try:
        peer_masked = ring.decode(buf, partner_rows, partner_cols)
    except ShapeError as exc:
        raise ProtocolError(f"{peer_type.name}: {exc}") from None
    transport.round_barrier("misfa masked matrices (both directions)")
    peer_share = dual_shuffle_partner_features(peer_masked, corr.receive)

    a_share, b_share = (own_share, peer_share) if role == "a" else (peer_share, own_share)
    if trace is not None:
        trace["a_features_share"] = a_share
        trace["b_features_share"] = b_share
    return extract_joined(a_share, b_share, mip)
