"""Arithmetic over Z_{2^l}, additive sharing, and permutations.

Matrices are numpy arrays of the unsigned dtype whose width is ``l``, so
wrap-around on overflow is the ring reduction itself. Permutations use
0-based indices: ``mapping[i]`` is the destination of row ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TypeVar

import numpy as np

from .errors import InvalidSizeError, ShapeError
from .rng import Rng

_DTYPES = {8: np.uint8, 16: np.uint16, 32: np.uint32, 64: np.uint64}

T = TypeVar("T")


@dataclass(frozen=True)
class Ring:
    """Z_{2^ell} with ell one of 8, 16, 32, 64."""

    ell: int = 64

    def __post_init__(self):
        if self.ell not in _DTYPES:
            raise ValueError(f"ell must be one of {sorted(_DTYPES)}, got {self.ell}")

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(_DTYPES[self.ell])

    @property
    def modulus(self) -> int:
        return 1 << self.ell

    @property
    def elem_bytes(self) -> int:
        return self.ell // 8

    def asarray(self, values, shape: tuple[int, ...] | None = None) -> np.ndarray:
        """Reduce arbitrary Python integers mod 2^ell into a ring matrix."""
        arr = np.asarray(values, dtype=object)
        if arr.size:
            arr = np.vectorize(lambda v: int(v) % self.modulus, otypes=[object])(arr)
        out = arr.astype(self.dtype)
        if shape is not None:
            out = out.reshape(shape)
        return out

    def zeros(self, rows: int, cols: int) -> np.ndarray:
        return np.zeros((rows, cols), dtype=self.dtype)

    def random(self, rows: int, cols: int, rng: Rng) -> np.ndarray:
        buf = rng.bytes(rows * cols * self.elem_bytes)
        return self.decode(buf, rows, cols)

    def encode(self, x: np.ndarray) -> bytes:
        """Row-major little-endian wire form."""
        return np.ascontiguousarray(x, dtype=self.dtype.newbyteorder("<")).tobytes()

    def decode(self, buf: bytes, rows: int, cols: int) -> np.ndarray:
        if len(buf) != rows * cols * self.elem_bytes:
            raise ShapeError(
                f"expected {rows * cols * self.elem_bytes} bytes for a {rows}x{cols} "
                f"matrix over Z_2^{self.ell}, got {len(buf)}"
            )
        arr = np.frombuffer(buf, dtype=self.dtype.newbyteorder("<"))
        return arr.astype(self.dtype).reshape(rows, cols)


def ring_of(x: np.ndarray) -> Ring:
    for ell, dt in _DTYPES.items():
        if x.dtype == dt:
            return Ring(ell)
    raise TypeError(f"{x.dtype} is not a ring dtype")


def share_matrix(x: np.ndarray, rng: Rng) -> tuple[np.ndarray, np.ndarray]:
    """Split ``x`` into two additive shares; the first is uniform."""
    ring = ring_of(x)
    first = ring.random(1, x.size, rng).reshape(x.shape)
    return first, x - first


def reconstruct(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ShapeError(f"share shapes differ: {a.shape} vs {b.shape}")
    if a.dtype != b.dtype:
        raise ShapeError(f"share dtypes differ: {a.dtype} vs {b.dtype}")
    return a + b


class Permutation:
    """Immutable bijection on range(n).

    ``apply`` follows the convention out[mapping[i]] = x[i].
    """

    __slots__ = ("_mapping",)

    def __init__(self, mapping: Sequence[int] | np.ndarray):
        m = np.array(mapping, dtype=np.int64).reshape(-1)
        n = m.size
        if n == 0:
            raise InvalidSizeError("a permutation needs at least one element")
        seen = np.zeros(n, dtype=bool)
        if m.min() < 0 or m.max() >= n:
            raise ValueError("mapping is not a bijection on range(n)")
        seen[m] = True
        if not seen.all():
            raise ValueError("mapping is not a bijection on range(n)")
        m.setflags(write=False)
        self._mapping = m

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(np.arange(n))

    @classmethod
    def from_one_based(cls, mapping: Sequence[int]) -> Permutation:
        return cls([v - 1 for v in mapping])

    @property
    def mapping(self) -> np.ndarray:
        return self._mapping

    @property
    def n(self) -> int:
        return int(self._mapping.size)

    def __len__(self) -> int:
        return self.n

    def __call__(self, i: int) -> int:
        return int(self._mapping[i])

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self._mapping, other._mapping)

    def __hash__(self) -> int:
        return hash(self._mapping.tobytes())

    def __repr__(self) -> str:
        if self.n <= 12:
            return f"Permutation({self._mapping.tolist()})"
        return f"Permutation(n={self.n})"

    def to_one_based(self) -> list[int]:
        return (self._mapping + 1).tolist()

    def apply(self, x):
        return apply_permutation(self, x)


def sample_permutation(n: int, rng: Rng) -> Permutation:
    if n < 1:
        raise InvalidSizeError(f"cannot sample a permutation of size {n}")
    return Permutation(rng.permutation(n))


def apply_permutation(p: Permutation, x: np.ndarray | Sequence[T]) -> np.ndarray | list[T]:
    """Move row ``i`` of ``x`` to row ``p(i)``."""
    if isinstance(x, np.ndarray):
        if x.shape[0] != p.n:
            raise ShapeError(f"permutation of size {p.n} applied to {x.shape[0]} rows")
        out = np.empty_like(x)
        out[p.mapping] = x
        return out
    if len(x) != p.n:
        raise ShapeError(f"permutation of size {p.n} applied to {len(x)} items")
    out_list: list = [None] * p.n
    for i, dst in enumerate(p.mapping.tolist()):
        out_list[dst] = x[i]
    return out_list


def compose(first: Permutation, second: Permutation) -> Permutation:
    """The permutation i -> second(first(i)), i.e. apply ``first`` then ``second``."""
    if first.n != second.n:
        raise ShapeError(f"cannot compose permutations of sizes {first.n} and {second.n}")
    return Permutation(second.mapping[first.mapping])


def invert(p: Permutation) -> Permutation:
    inv = np.empty(p.n, dtype=np.int64)
    inv[p.mapping] = np.arange(p.n)
    return Permutation(inv)
