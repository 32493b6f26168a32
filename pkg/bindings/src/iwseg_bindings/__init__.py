"""Array-level bindings for training loops.

Two functions over plain C-contiguous numpy arrays, wrapping the core package
without copying buffers: :func:`py_inverse_weights` builds the inverse weight
map of a binary mask, and :func:`py_loss` evaluates a loss value plus its
gradient with respect to the probability map. Outputs match the core (and the
CLI path) bitwise on values; gradients agree to 1e-12.

Gradients come back as plain arrays; wiring them into an autodiff graph is the
caller's job (see the README for a custom-gradient wrapper recipe).
"""

from __future__ import annotations

from typing import Dict, Optional, Tuple

import numpy as np

import iwseg
from iwseg import LossSpec, Volume, evaluate_loss, inverse_weight_map

__version__ = iwseg.__version__

__all__ = ["py_inverse_weights", "py_loss", "__version__"]

_LOSS_PARAMS = (
    "gamma",
    "alpha",
    "beta",
    "reduction",
    "wce_weight_source",
    "prob_clamp_eps",
    "dice_eps",
)


def _check_array(name: str, arr, dtype: np.dtype) -> np.ndarray:
    if not isinstance(arr, np.ndarray):
        raise TypeError(f"{name} must be a numpy array, got {type(arr).__name__}")
    if arr.ndim != 3:
        raise ValueError(f"{name}: expected 3D array, got {arr.ndim}D")
    if arr.dtype != dtype:
        raise TypeError(f"{name} must have dtype {np.dtype(dtype).name}, got {arr.dtype.name}")
    if not arr.flags.c_contiguous:
        raise ValueError(f"{name} must be C-contiguous")
    return arr


def py_inverse_weights(mask: np.ndarray, connectivity: int = 26) -> np.ndarray:
    """Inverse weight map of a binary u8 mask as a float64 array.

    Every voxel of a connected component (background included) receives
    N / (M * component_size), so all nonempty components carry equal total
    weight and the map sums to the voxel count.
    """
    _check_array("mask", mask, np.dtype(np.uint8))
    return inverse_weight_map(Volume(mask), connectivity).weights.data


def py_loss(
    kind: str,
    p: np.ndarray,
    y: np.ndarray,
    hyperparams: Optional[Dict] = None,
) -> Tuple[float, np.ndarray]:
    """Loss value and gradient for a probability map against a binary mask.

    ``p`` must be float64 and ``y`` u8, both 3D and C-contiguous with equal
    shapes. ``hyperparams`` takes the loss hyperparameters (gamma, alpha,
    beta, reduction, wce_weight_source, prob_clamp_eps, dice_eps) plus
    ``connectivity`` for the iw_* kinds, whose weight map is derived from
    ``y`` internally.
    """
    _check_array("p", p, np.dtype(np.float64))
    _check_array("y", y, np.dtype(np.uint8))
    params = dict(hyperparams or {})
    connectivity = int(params.pop("connectivity", 26))
    unknown = set(params) - set(_LOSS_PARAMS)
    if unknown:
        raise TypeError(f"unknown hyperparameters: {sorted(unknown)}")
    spec = LossSpec(kind, **params)
    y_vol = Volume(y)
    weight_map = inverse_weight_map(y_vol, connectivity) if spec.uses_weight_map else None
    result = evaluate_loss(spec, Volume(p), y_vol, weight_map)
    return result.value, result.grad.data
