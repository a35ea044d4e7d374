"""The four-row worked example, pinned for regression tests.

The share values in the worked example are illustrative rather than derived
from any seed, so the sidecar pins the dealer's sender shares; the receiver
shares and every downstream value then follow from the protocol.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .files import read_table
from .group import GroupScalar
from .join import OfflineMaterial, PartyTable
from .ring import Permutation, Ring

_PKG = "dualjoin.data.worked_example"


@dataclass(frozen=True)
class WorkedExample:
    table_a: PartyTable
    table_b: PartyTable
    a_first: Permutation
    a_second: Permutation
    b_first: Permutation
    b_second: Permutation
    mask_a: np.ndarray
    mask_b: np.ndarray
    dealer_pins: dict[str, np.ndarray]
    key_a: GroupScalar
    key_b: GroupScalar
    mipairs: list[tuple[int, int]]        # 1-based, as printed in the example
    a_features_shuffled: list[int]
    b_features_shuffled: list[int]
    a_features_shares: dict[str, list[int]]
    b_features_shares: dict[str, list[int]]
    join_share_a: list[list[int]]
    join_share_b: list[list[int]]
    joined: list[list[int]]

    @property
    def material_a(self) -> OfflineMaterial:
        return OfflineMaterial(self.a_first, self.a_second, self.mask_a, self.key_a)

    @property
    def material_b(self) -> OfflineMaterial:
        return OfflineMaterial(self.b_first, self.b_second, self.mask_b, self.key_b)


def _path(name: str):
    return resources.files("dualjoin").joinpath("data", "worked_example", name)


def load_worked_example() -> WorkedExample:
    side = json.loads(_path("sidecar.json").read_text())
    ring = Ring(side["ell"])
    with resources.as_file(_path("table_a.csv")) as pa, resources.as_file(_path("table_b.csv")) as pb:
        table_a, table_b = read_table(pa, ring), read_table(pb, ring)
    perms = {k: Permutation.from_one_based(v) for k, v in side["permutations"].items()}
    exp = side["expected"]
    return WorkedExample(
        table_a=table_a,
        table_b=table_b,
        a_first=perms["a_first"],
        a_second=perms["a_second"],
        b_first=perms["b_first"],
        b_second=perms["b_second"],
        mask_a=np.array(side["masks"]["a"], dtype=ring.dtype),
        mask_b=np.array(side["masks"]["b"], dtype=ring.dtype),
        dealer_pins={k: np.array(v, dtype=ring.dtype) for k, v in side["dealer_sender_shares"].items()},
        key_a=GroupScalar(side["keys"]["a"]),
        key_b=GroupScalar(side["keys"]["b"]),
        mipairs=[tuple(p) for p in exp["mipairs"]],
        a_features_shuffled=exp["a_features_shuffled"],
        b_features_shuffled=exp["b_features_shuffled"],
        a_features_shares=exp["a_features_shares"],
        b_features_shares=exp["b_features_shares"],
        join_share_a=exp["join_share_a"],
        join_share_b=exp["join_share_b"],
        joined=exp["joined"],
    )
