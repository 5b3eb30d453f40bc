import numpy as np
import pytest

from fitzcal.data_model import BinaryMask, ProbMap, quantize_probs


def make_prob(raw, width, height) -> ProbMap:
    return ProbMap(width, height, quantize_probs(np.asarray(raw, dtype=np.float64)))


def make_mask(labels, width, height) -> BinaryMask:
    return BinaryMask(width, height, np.asarray(labels, dtype=np.uint8))


def random_pair(rng: np.random.Generator, max_side=64, mask_style=None):
    """Random quantized image/mask pair for oracle checks."""
    width = int(rng.integers(1, max_side + 1))
    height = int(rng.integers(1, max_side + 1))
    n = width * height
    probs = rng.integers(0, 1001, size=n).astype(np.uint16)
    if mask_style is None:
        mask_style = int(rng.integers(0, 4))
    if mask_style == 0:
        labels = np.zeros(n, dtype=np.uint8)
    elif mask_style == 1:
        labels = np.ones(n, dtype=np.uint8)
    else:
        labels = rng.integers(0, 2, size=n).astype(np.uint8)
    return ProbMap(width, height, probs), BinaryMask(width, height, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
