import hashlib

import numpy as np


def _name_key(name: str) -> int:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_seed(root_seed: int, name: str) -> int:
    """Integer seed for the named subsystem stream of a run."""
    sequence = np.random.SeedSequence([int(root_seed), _name_key(name)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def stream(root_seed: int, name: str) -> np.random.Generator:
    """Independent generator for one subsystem (dataset, init, mobility/<id>, ...)."""
    return np.random.default_rng(np.random.SeedSequence([int(root_seed), _name_key(name)]))
