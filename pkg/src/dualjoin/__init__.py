"""Two-party secure data join with secret-shared output."""

from .join import (
    JoinConfig,
    OfflineMaterial,
    PartyTable,
    RunStats,
    plaintext_join_oracle,
    run_join,
    run_loopback,
    verify_join,
)
from .misfa import JoinOutputShare
from .ring import Permutation, Ring
from .rng import Rng
from .smig import MIPairs

__version__ = "0.1.0"

__all__ = [
    "JoinConfig", "JoinOutputShare", "MIPairs", "OfflineMaterial", "PartyTable", "Permutation", "Ring",
    "Rng", "RunStats", "plaintext_join_oracle", "run_join", "run_loopback", "verify_join",
]
