import numpy as np
import pytest

from iwseg import Volume


@pytest.fixture
def one_lesion_mask() -> Volume:
    """4x4x4 patch with a single 4-voxel lesion: weights (8/15, 8.0)."""
    mask = np.zeros((4, 4, 4), dtype=np.uint8)
    mask[0, 0, :2] = 1
    mask[0, 1, :2] = 1
    return Volume(mask)


@pytest.fixture
def two_lesion_mask() -> Volume:
    """4x4x4 patch with lesions of 2 and 6 voxels: weights (8/21, 32/3, 32/9)."""
    mask = np.zeros((4, 4, 4), dtype=np.uint8)
    mask[0, 0, 0:2] = 1
    mask[3, 2:4, 1:4] = 1
    return Volume(mask)


def random_mask(rng: np.random.Generator, max_side: int = 8) -> Volume:
    """Random-shape binary mask with density drawn uniformly from [0, 1]."""
    shape = tuple(int(rng.integers(1, max_side + 1)) for _ in range(3))
    density = rng.random()
    return Volume((rng.random(shape) < density).astype(np.uint8))


def constant_class_prob(mask: Volume, prob: float) -> Volume:
    """Probability map whose correct-class probability is `prob` everywhere."""
    p = np.where(mask.data > 0, prob, 1.0 - prob)
    return Volume(p.astype(np.float64), mask.spacing_mm)
