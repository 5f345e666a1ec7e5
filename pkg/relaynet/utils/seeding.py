"""Independent random streams keyed by (seed, purpose, index).

Training and test scenarios draw from different purpose tags, so their
streams never overlap whatever the seeds are.
"""

import numpy as np

TRAIN = 1
TEST = 2
POLICY = 3
SYNTH = 4
INIT = 5
AUDIT = 6
WALK = 7
SHUFFLE = 8


def stream(seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(purpose), int(index)])
