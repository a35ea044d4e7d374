"""Synthetic party tables with a planted intersection."""

from __future__ import annotations

import math

from .join import PartyTable
from .ring import Ring, apply_permutation, sample_permutation
from .rng import Rng


def overlap_count(n_a: int, n_b: int, rho: float) -> int:
    """floor(rho * min(n_a, n_b))."""
    if not 0.0 <= rho <= 1.0 or math.isnan(rho):
        raise ValueError(f"intersection rate must lie in [0, 1], got {rho}")
    return math.floor(rho * min(n_a, n_b) + 1e-9)


def _fresh_ids(count: int, rng: Rng, taken: set[bytes]) -> list[bytes]:
    out = []
    while len(out) < count:
        ident = b"id-" + rng.bytes(8).hex().encode()
        if ident not in taken:
            taken.add(ident)
            out.append(ident)
    return out


def generate_tables(n_a: int, n_b: int, m_a: int, m_b: int, rho: float, rng: Rng,
                    ring: Ring = Ring()) -> tuple[PartyTable, PartyTable]:
    if n_a < 1 or n_b < 1:
        raise ValueError("both tables need at least one row")
    if m_a < 0 or m_b < 0:
        raise ValueError("feature counts must be non-negative")
    c = overlap_count(n_a, n_b, rho)
    taken: set[bytes] = set()
    shared = _fresh_ids(c, rng, taken)
    ids_a = shared + _fresh_ids(n_a - c, rng, taken)
    ids_b = shared + _fresh_ids(n_b - c, rng, taken)
    ids_a = apply_permutation(sample_permutation(n_a, rng), ids_a)
    ids_b = apply_permutation(sample_permutation(n_b, rng), ids_b)
    table_a = PartyTable(tuple(ids_a), ring.random(n_a, m_a, rng))
    table_b = PartyTable(tuple(ids_b), ring.random(n_b, m_b, rng))
    return table_a, table_b
