"""Connected-component labeling of binary masks and per-component geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import ndimage

from .errors import InternalInvariantError, ValidationError
from .volume import Volume

#: Supported 3D neighborhood sizes: faces / faces+edges / faces+edges+corners.
CONNECTIVITIES = (6, 18, 26)
_CONNECTIVITY_RANK = {6: 1, 18: 2, 26: 3}


def connectivity_structure(connectivity: int) -> np.ndarray:
    """3x3x3 boolean structuring element for a 6/18/26 neighborhood."""
    if connectivity not in _CONNECTIVITY_RANK:
        raise ValidationError(f"connectivity must be one of {CONNECTIVITIES}, got {connectivity}")
    return ndimage.generate_binary_structure(3, _CONNECTIVITY_RANK[connectivity])


@dataclass(frozen=True)
class ComponentSet:
    """Partition of a mask into background (label 0) and K lesion components.

    ``labels`` holds int32 labels in first-encounter scan order; ``sizes`` has
    K+1 voxel counts, background first. The background is a single component
    even when geometrically disconnected.
    """

    labels: np.ndarray
    sizes: np.ndarray
    connectivity: int
    spacing_mm: Tuple[float, float, float]

    def __post_init__(self) -> None:
        if int(self.sizes.sum()) != int(self.labels.size):
            raise InternalInvariantError("component sizes do not sum to the voxel count")
        if len(self.sizes) > 1 and int(self.sizes[1:].min()) < 1:
            raise InternalInvariantError("a lesion component has zero voxels")

    @property
    def n_lesions(self) -> int:
        return len(self.sizes) - 1

    @property
    def n_voxels(self) -> int:
        return int(self.labels.size)

    @property
    def lesion_sizes(self) -> np.ndarray:
        return self.sizes[1:]

    def lesion_mask(self, label: int) -> np.ndarray:
        if not 1 <= label <= self.n_lesions:
            raise ValidationError(f"lesion label {label} out of range 1..{self.n_lesions}")
        return self.labels == label

    def lesion_diameters_mm(self) -> np.ndarray:
        """Equivalent-sphere diameter of every lesion, in scan order."""
        return np.array(
            [equivalent_diameter(int(s), self.spacing_mm) for s in self.sizes[1:]],
            dtype=np.float64,
        )


def _require_binary(mask: Volume) -> np.ndarray:
    arr = mask.data
    if arr.dtype != np.uint8:
        raise ValidationError(f"mask must be u8, got {mask.dtype_name}")
    if arr.max(initial=0) > 1:
        bad = int(arr.max())
        raise ValidationError(f"mask must be binary (0/1), found value {bad}")
    return arr


def label_components(mask: Volume, connectivity: int = 26) -> ComponentSet:
    """Split a binary mask into background plus maximal connected foreground components.

    Lesion labels 1..K are assigned by each component's first voxel in scan
    order (z, then y, then x), so the labeling is deterministic.
    """
    arr = _require_binary(mask)
    structure = connectivity_structure(connectivity)
    raw, n_raw = ndimage.label(arr, structure=structure)
    if n_raw == 0:
        labels = np.zeros(arr.shape, dtype=np.int32)
        sizes = np.array([arr.size], dtype=np.int64)
        return ComponentSet(labels, sizes, connectivity, mask.spacing_mm)

    # scipy's label order is an implementation detail; remap to scan order.
    uniq, first = np.unique(raw.ravel(), return_index=True)
    fg = uniq > 0
    order = np.argsort(first[fg], kind="stable")
    remap = np.zeros(n_raw + 1, dtype=np.int32)
    remap[uniq[fg][order]] = np.arange(1, int(fg.sum()) + 1, dtype=np.int32)
    labels = remap[raw]
    sizes = np.bincount(labels.ravel(), minlength=labels.max() + 1).astype(np.int64)
    return ComponentSet(labels, sizes, connectivity, mask.spacing_mm)


def equivalent_diameter(component_size: int, spacing_mm: Sequence[float]) -> float:
    """Diameter (mm) of the sphere whose volume equals the component's physical volume."""
    if component_size < 1:
        raise ValidationError(f"component size must be >= 1 voxel, got {component_size}")
    sz, sy, sx = (float(s) for s in spacing_mm)
    if min(sz, sy, sx) <= 0:
        raise ValidationError(f"spacing must be positive, got {spacing_mm}")
    volume = component_size * sz * sy * sx
    return 2.0 * (3.0 * volume / (4.0 * math.pi)) ** (1.0 / 3.0)
