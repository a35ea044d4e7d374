"""One-message oblivious shuffle on top of dealer-supplied correlations.

The sender holds a mask R and a share of pi(R); the receiver holds pi and the
other share of pi(R). Online, the sender ships X - R and keeps its share; the
receiver permutes the masked matrix and adds its share. The two outputs are
additive shares of pi(X).

The offline functionality is realized by a trusted dealer. It is the only
code that ever sees both R and pi, and it is swappable: anything producing a
``SenderHalf``/``ReceiverHalf`` pair with the same reconstruction property
can replace it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CorrelationConsumedError, ShapeError
from .ring import Permutation, Ring, apply_permutation, ring_of
from .rng import Rng


@dataclass
class SenderHalf:
    mask: np.ndarray
    share: np.ndarray  # sender's share of pi(mask)
    used: bool = field(default=False, repr=False)

    def take(self) -> tuple[np.ndarray, np.ndarray]:
        if self.used:
            raise CorrelationConsumedError("sender correlation already consumed")
        self.used = True
        return self.mask, self.share


@dataclass
class ReceiverHalf:
    perm: Permutation
    share: np.ndarray  # receiver's share of pi(mask)
    used: bool = field(default=False, repr=False)

    def take(self) -> tuple[Permutation, np.ndarray]:
        if self.used:
            raise CorrelationConsumedError("receiver correlation already consumed")
        self.used = True
        return self.perm, self.share


@dataclass
class ShuffleCorrelation:
    sender: SenderHalf
    receiver: ReceiverHalf

    @property
    def shape(self) -> tuple[int, int]:
        return self.sender.mask.shape


def correlate(mask: np.ndarray, perm: Permutation, rng: Rng,
              sender_share: np.ndarray | None = None) -> ShuffleCorrelation:
    """Dealer step: share pi(mask) between sender and receiver.

    ``sender_share`` pins the sender's half instead of sampling it, which is how
    fixtures reproduce externally chosen share values.
    """
    if mask.ndim != 2:
        raise ShapeError("mask must be a 2-D ring matrix")
    if perm.n != mask.shape[0]:
        raise ShapeError(f"permutation of size {perm.n} for a mask with {mask.shape[0]} rows")
    ring = ring_of(mask)
    shuffled = apply_permutation(perm, mask)
    if sender_share is None:
        sender_share = ring.random(*mask.shape, rng)
    else:
        sender_share = np.asarray(sender_share, dtype=ring.dtype).reshape(mask.shape)
    receiver_share = shuffled - sender_share
    return ShuffleCorrelation(SenderHalf(mask, sender_share), ReceiverHalf(perm, receiver_share))


def dealer_generate_correlation(n: int, m: int, perm: Permutation, rng: Rng,
                                ring: Ring = Ring()) -> ShuffleCorrelation:
    if perm.n != n:
        raise ShapeError(f"permutation of size {perm.n} for {n} rows")
    mask = ring.random(n, m, rng)
    return correlate(mask, perm, rng)


def oshuffle_send(x: np.ndarray, half: SenderHalf) -> tuple[np.ndarray, np.ndarray]:
    """Returns (masked matrix to send, sender's output share)."""
    if x.shape != half.mask.shape:
        raise ShapeError(f"input {x.shape} does not match correlation {half.mask.shape}")
    if x.dtype != half.mask.dtype:
        raise ShapeError(f"input dtype {x.dtype} does not match correlation {half.mask.dtype}")
    mask, share = half.take()
    return x - mask, share


def oshuffle_receive(masked: np.ndarray, half: ReceiverHalf) -> np.ndarray:
    if masked.shape != half.share.shape:
        raise ShapeError(f"masked input {masked.shape} does not match correlation {half.share.shape}")
    perm, share = half.take()
    return apply_permutation(perm, masked) + share
