import numpy as np

# One named stream per consumer; no two consumers share a sequence.
TEXTURE_STREAM = 1
INIT_STREAM = 2
TRAINING_STREAM = 3
EXTRACTOR_STREAM = 4


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """
    Seeded generator backed by Philox, a counter-based 64-bit bit generator, so draws are
    reproducible across platforms.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))
