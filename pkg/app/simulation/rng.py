import numpy as np

MAX_SEED = 2**64 - 1


def episode_stream(master_seed: int, index: int) -> np.random.Generator:
    if not 0 <= master_seed <= MAX_SEED:
        raise ValueError("master_seed must fit in an unsigned 64-bit integer")
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(sequence))
