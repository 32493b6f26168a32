"""Voxel weight maps that balance differently sized components of a binary mask.

Every voxel of component ``L_j`` receives ``w_j = N / (M * |L_j|)``, where N is
the patch voxel count and M the number of nonempty components (background plus
lesions). Two facts follow directly and are enforced as invariants: the weights
sum to N, and ``|L_j| * w_j`` is the same for every nonempty component, so each
component contributes equally to a weighted pointwise loss under a constant
prediction. Smaller components therefore get strictly larger weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .components import ComponentSet, label_components
from .errors import InternalInvariantError
from .volume import Volume

SUM_RTOL = 1e-9
EQUAL_CONTRIBUTION_RTOL = 1e-12


@dataclass(frozen=True)
class WeightMap:
    """Per-voxel weights plus the per-component weights they were built from.

    ``component_weights[k]`` is the weight of component k (background is k=0);
    an empty background is recorded with weight 0.0 since no voxel carries it.
    """

    weights: Volume
    component_weights: np.ndarray
    components: ComponentSet

    def __post_init__(self) -> None:
        sizes = self.components.sizes.astype(np.float64)
        nonempty = sizes > 0
        n = float(self.components.n_voxels)
        total = float(np.dot(sizes, self.component_weights))
        if abs(total - n) > SUM_RTOL * n:
            raise InternalInvariantError(
                f"weight normalization violated: sum {total!r} != voxel count {n!r}"
            )
        masses = sizes[nonempty] * self.component_weights[nonempty]
        if masses.size and (masses.max() - masses.min()) > EQUAL_CONTRIBUTION_RTOL * masses.max():
            raise InternalInvariantError("per-component weight mass is not constant")
        if np.any(self.component_weights[nonempty] <= 0):
            raise InternalInvariantError("component weights must be positive")


def inverse_weight_map(mask: Volume, connectivity: int = 26) -> WeightMap:
    """Build the inverse weight map of a binary mask.

    Only nonempty components enter the divisor, so a patch with no background
    (fully lesion-covered) still normalizes to N instead of dividing by zero.
    """
    comps = label_components(mask, connectivity)
    sizes = comps.sizes.astype(np.float64)
    nonempty = sizes > 0
    m = int(nonempty.sum())
    n = float(comps.n_voxels)
    component_weights = np.zeros_like(sizes)
    np.divide(n, m * sizes, out=component_weights, where=nonempty)
    weights = component_weights[comps.labels]
    return WeightMap(
        weights=Volume(weights, mask.spacing_mm),
        component_weights=component_weights,
        components=comps,
    )
