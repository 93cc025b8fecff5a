"""Deterministic seed derivation.

Every random stream in a campaign is a ``random.Random`` seeded from the
campaign seed plus labels, so results never depend on scheduling.
"""

from __future__ import annotations

import hashlib
import random
import sys

RNG_METADATA = {
    "generator": "python random.Random (MT19937)",
    "python": f"{sys.version_info.major}.{sys.version_info.minor}",
    "derivation": "blake2b-64 over seed and labels",
}


def derive_seed(*parts: object) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def derive_rng(*parts: object) -> random.Random:
    return random.Random(derive_seed(*parts))
