"""
Random streams. Replicate r of any Monte Carlo run draws from a generator
seeded with (master seed, r), so results do not depend on execution order.
"""
import numpy as np


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng([seed, replicate])


def master_seed(rng: np.random.Generator) -> int:
    """Draw a master seed from a caller-supplied stream."""
    return int(rng.integers(0, 2**63 - 1))
