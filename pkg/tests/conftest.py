import numpy as np
import pytest

from scribseg.grids import FOREGROUND, BACKGROUND, SaliencyMap, ScribbleMask


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def rand_map(rng, h, w):
    return SaliencyMap(rng.random((h, w)))


def rand_mask(rng, h, w, frac=0.1):
    """Scribble mask with at least one foreground and one background pixel."""
    labels = np.zeros((h, w), dtype=np.int8)
    draws = rng.random((h, w))
    labels[draws < frac / 2] = FOREGROUND
    labels[draws > 1 - frac / 2] = BACKGROUND
    flat = labels.reshape(-1)
    if not (flat == FOREGROUND).any():
        flat[0] = FOREGROUND
    if not (flat == BACKGROUND).any():
        flat[-1] = BACKGROUND
    return ScribbleMask(labels)
