"""Lesion-biased random patch extraction from an image/mask pair.

With probability ``lesion_prob`` a foreground voxel is drawn uniformly and the
patch origin is drawn uniformly among all origins whose patch covers that
voxel, which guarantees the patch contains foreground without rejection
sampling. Otherwise the origin is uniform over all valid origins. Axes shorter
than the patch are padded symmetrically (pad value for the image, 0 for the
mask) and the origin is reported in original coordinates, so it can be
negative along padded axes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ValidationError
from .volume import Volume

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PatchSpec:
    size: Tuple[int, int, int] = (128, 128, 128)
    lesion_prob: float = 0.5
    pad_value: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        size = tuple(int(s) for s in self.size)
        if len(size) != 3 or any(s < 1 for s in size):
            raise ValidationError(f"patch size components must be >= 1, got {self.size}")
        if not 0.0 <= self.lesion_prob <= 1.0:
            raise ValidationError(f"lesion_prob must lie in [0, 1], got {self.lesion_prob}")
        object.__setattr__(self, "size", size)


def _padded_extract(arr: np.ndarray, origin: Tuple[int, ...], size: Tuple[int, ...], fill) -> np.ndarray:
    out = np.full(size, fill, dtype=arr.dtype)
    src = []
    dst = []
    for o, p, d in zip(origin, size, arr.shape):
        lo = max(o, 0)
        hi = min(o + p, d)
        src.append(slice(lo, hi))
        dst.append(slice(lo - o, hi - o))
    if all(s.stop > s.start for s in src):
        out[tuple(dst)] = arr[tuple(src)]
    return out


def sample_patch(
    image: Volume, mask: Volume, spec: PatchSpec, rng: np.random.Generator
) -> Tuple[Volume, Volume, Tuple[int, int, int]]:
    """Draw one patch; deterministic given the generator state."""
    if image.shape != mask.shape:
        raise ValidationError(f"image shape {image.shape} != mask shape {mask.shape}")
    if mask.data.dtype != np.uint8 or mask.data.max(initial=0) > 1:
        raise ValidationError("mask must be a binary u8 volume")

    biased = rng.random() < spec.lesion_prob
    voxel = None
    if biased:
        flat = np.flatnonzero(mask.data)
        if flat.size == 0:
            logger.info("lesion-biased draw requested on an all-background mask; sampling uniformly")
        else:
            voxel = np.unravel_index(int(flat[int(rng.integers(flat.size))]), mask.shape)

    origin = []
    for axis in range(3):
        d = image.shape[axis]
        p = spec.size[axis]
        if d < p:
            origin.append(-((p - d) // 2))
            continue
        if voxel is not None:
            lo = max(0, voxel[axis] - p + 1)
            hi = min(d - p, voxel[axis])
        else:
            lo, hi = 0, d - p
        origin.append(int(rng.integers(lo, hi + 1)))
    origin = tuple(origin)

    img_patch = _padded_extract(image.data, origin, spec.size, np.array(spec.pad_value).astype(image.data.dtype))
    msk_patch = _padded_extract(mask.data, origin, spec.size, np.uint8(0))
    return (
        Volume(img_patch, image.spacing_mm),
        Volume(msk_patch, mask.spacing_mm),
        origin,
    )


class PatchSampler:
    """Owns one RNG stream; not safe to share across threads."""

    def __init__(self, spec: PatchSpec):
        self.spec = spec
        self._rng = np.random.default_rng(spec.seed)

    def sample(self, image: Volume, mask: Volume):
        return sample_patch(image, mask, self.spec, self._rng)
