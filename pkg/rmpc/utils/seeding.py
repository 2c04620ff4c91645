import hashlib

import numpy as np


def derive_seed(root_seed: int, label: str) -> int:
    """Derives a stable 63-bit seed for the component stream `label`."""
    digest = hashlib.sha256(f"{int(root_seed)}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & ((1 << 63) - 1)


def component_rng(root_seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(derive_seed(root_seed, label)))
