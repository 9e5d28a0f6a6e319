"""Small shared helpers: seeded sub-streams and canonical JSON output."""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Derive an independent generator from a root seed and a stream name.

    All randomness in the package flows from one user-facing seed; each
    consumer (workload synthesis, policy init, action sampling, ...) gets
    its own named stream so adding a consumer never perturbs the others.
    """
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF] + words))


def canonical_json(obj: Any) -> str:
    """Serialize with sorted keys and no float mangling; stable across runs."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)


def dump_json(path: str, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(obj))
        fh.write("\n")


def load_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
