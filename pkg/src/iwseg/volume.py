"""Dense 3D volume container, bit-exact VOL file I/O, and intensity preprocessing.

A :class:`Volume` is a C-contiguous 3D array indexed ``[z, y, x]`` (x fastest)
plus per-axis voxel spacing in millimeters. The on-disk VOL format is a pair of
files: ``<name>.volhdr`` (UTF-8 JSON with ``shape``, ``dtype``, ``spacing_mm``)
and ``<name>.volraw`` (little-endian payload, C order). The pairing makes round
trips bit-exact, including NaN payloads, which the test suite relies on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ValidationError

PathLike = Union[str, Path]

#: dtype string used in VOL headers -> numpy dtype (native byte order).
DTYPES = {
    "u8": np.dtype(np.uint8),
    "i16": np.dtype(np.int16),
    "f32": np.dtype(np.float32),
    "f64": np.dtype(np.float64),
}
_DTYPE_NAMES = {v: k for k, v in DTYPES.items()}

HEADER_SUFFIX = ".volhdr"
RAW_SUFFIX = ".volraw"


@dataclass(frozen=True)
class Volume:
    """A dense 3D scalar grid with voxel spacing.

    ``data`` is indexed ``[z, y, x]``, stored C-contiguous with x fastest, and
    restricted to the dtypes of the VOL format (u8, i16, f32, f64). Instances
    are treated as immutable after construction; operations return new volumes.
    """

    data: np.ndarray
    spacing_mm: Tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data)
        if arr.ndim != 3:
            raise ValidationError(f"expected 3D volume data, got {arr.ndim}D")
        if any(dim < 1 for dim in arr.shape):
            raise ValidationError(f"volume dimensions must be positive, got {arr.shape}")
        if arr.dtype not in _DTYPE_NAMES:
            raise ValidationError(
                f"unsupported volume dtype {arr.dtype!r}; expected one of {sorted(DTYPES)}"
            )
        try:
            spacing = tuple(float(s) for s in self.spacing_mm)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"spacing_mm must be 3 finite positive reals: {exc}") from exc
        if len(spacing) != 3 or not all(math.isfinite(s) and s > 0 for s in spacing):
            raise ValidationError(f"spacing_mm must be 3 finite positive reals, got {self.spacing_mm}")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing_mm", spacing)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return tuple(self.data.shape)  # type: ignore[return-value]

    @property
    def dtype_name(self) -> str:
        return _DTYPE_NAMES[self.data.dtype]

    @property
    def n_voxels(self) -> int:
        return int(self.data.size)

    @property
    def voxel_volume_mm3(self) -> float:
        sz, sy, sx = self.spacing_mm
        return sz * sy * sx

    def astype(self, dtype_name: str) -> "Volume":
        if dtype_name not in DTYPES:
            raise ValidationError(f"unknown dtype {dtype_name!r}")
        return Volume(self.data.astype(DTYPES[dtype_name]), self.spacing_mm)


def _vol_paths(path: PathLike) -> Tuple[Path, Path]:
    """Resolve a VOL path (header path, raw path, or bare stem) to the file pair."""
    s = str(path)
    if s.endswith(HEADER_SUFFIX):
        stem = s[: -len(HEADER_SUFFIX)]
    elif s.endswith(RAW_SUFFIX):
        stem = s[: -len(RAW_SUFFIX)]
    else:
        stem = s
    return Path(stem + HEADER_SUFFIX), Path(stem + RAW_SUFFIX)


def save_vol(volume: Volume, path: PathLike) -> Tuple[Path, Path]:
    """Write ``<stem>.volhdr`` + ``<stem>.volraw``; round trips are bit-exact.

    Returns the (header, raw) paths actually written.
    """
    header_path, raw_path = _vol_paths(path)
    header = {
        "shape": list(volume.shape),
        "dtype": volume.dtype_name,
        "spacing_mm": list(volume.spacing_mm),
    }
    le = volume.data.astype(volume.data.dtype.newbyteorder("<"), copy=False)
    try:
        header_path.write_text(json.dumps(header) + "\n", encoding="utf-8")
        raw_path.write_bytes(le.tobytes())
    except OSError as exc:
        raise ValidationError(f"cannot write volume to {path}: {exc}") from exc
    return header_path, raw_path


def load_vol(path: PathLike) -> Volume:
    """Load a VOL header/raw pair written by :func:`save_vol`."""
    header_path, raw_path = _vol_paths(path)
    if not header_path.is_file():
        raise ValidationError(f"missing volume header file: {header_path}")
    try:
        header = json.loads(header_path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"garbled volume header {header_path}: {exc}") from exc
    if not isinstance(header, dict):
        raise ValidationError(f"garbled volume header {header_path}: expected a JSON object")
    missing = {"shape", "dtype", "spacing_mm"} - header.keys()
    if missing:
        raise ValidationError(f"volume header {header_path} missing fields {sorted(missing)}")

    shape = header["shape"]
    if (
        not isinstance(shape, list)
        or len(shape) != 3
        or not all(isinstance(d, int) and d > 0 for d in shape)
    ):
        raise ValidationError(f"volume header {header_path}: shape must be 3 positive integers")
    dtype_name = header["dtype"]
    if dtype_name not in DTYPES:
        raise ValidationError(f"volume header {header_path}: unknown dtype {dtype_name!r}")

    dtype = DTYPES[dtype_name]
    if not raw_path.is_file():
        raise ValidationError(f"missing raw payload file: {raw_path}")
    raw = raw_path.read_bytes()
    expected = shape[0] * shape[1] * shape[2] * dtype.itemsize
    if len(raw) != expected:
        raise ValidationError(
            f"size mismatch in {raw_path}: header implies {expected} bytes, file has {len(raw)}"
        )
    arr = np.frombuffer(raw, dtype=dtype.newbyteorder("<")).reshape(shape)
    return Volume(arr.astype(dtype), tuple(header["spacing_mm"]))


def crop(volume: Volume, origin: Sequence[int], size: Sequence[int]) -> Volume:
    """Extract the box ``[origin, origin + size)``; must lie fully inside the volume."""
    if len(origin) != 3 or len(size) != 3:
        raise ValidationError("origin and size must each have 3 components")
    origin = tuple(int(v) for v in origin)
    size = tuple(int(v) for v in size)
    if any(s < 1 for s in size):
        raise ValidationError(f"crop size must be positive, got {size}")
    for o, s, d in zip(origin, size, volume.shape):
        if o < 0 or o + s > d:
            raise ValidationError(
                f"crop box origin={origin} size={size} exceeds volume shape {volume.shape}"
            )
    z, y, x = origin
    dz, dy, dx = size
    return Volume(volume.data[z : z + dz, y : y + dy, x : x + dx].copy(), volume.spacing_mm)


@dataclass(frozen=True)
class PreprocessConfig:
    """Intensity preprocessing: clip, fill outside an organ mask, min-max rescale.

    ``clip_lo``/``clip_hi`` must be given together. ``outside_fill`` replaces
    values where the organ mask is 0 (after clipping, before rescaling); when
    clipping is active it must lie inside the clip range so the unscaled output
    stays within ``[clip_lo, clip_hi]``.
    """

    clip_lo: Optional[float] = None
    clip_hi: Optional[float] = None
    outside_fill: Optional[float] = None
    rescale: bool = False

    def __post_init__(self) -> None:
        if (self.clip_lo is None) != (self.clip_hi is None):
            raise ValidationError("clip_lo and clip_hi must be given together")
        if self.clip_lo is not None:
            if not (math.isfinite(self.clip_lo) and math.isfinite(self.clip_hi)):
                raise ValidationError("clip bounds must be finite")
            if not self.clip_lo < self.clip_hi:
                raise ValidationError(
                    f"clip_lo must be < clip_hi, got ({self.clip_lo}, {self.clip_hi})"
                )
            if self.outside_fill is not None and not (
                self.clip_lo <= self.outside_fill <= self.clip_hi
            ):
                raise ValidationError("outside_fill must lie within the clip range")

    @property
    def clips(self) -> bool:
        return self.clip_lo is not None


def preprocess(
    volume: Volume,
    config: PreprocessConfig,
    organ_mask: Optional[Volume] = None,
) -> Volume:
    """Clip, mask-fill, and optionally min-max rescale a volume to float32.

    Steps, in order: clip intensities to ``[clip_lo, clip_hi]``; where the
    organ mask is 0, overwrite with ``outside_fill``; if ``rescale``, map the
    observed per-image range onto [0, 1]. A constant image rescales to all
    zeros rather than dividing by zero.
    """
    arr = volume.data.astype(np.float64)
    if config.clips:
        arr = np.clip(arr, config.clip_lo, config.clip_hi)
    if organ_mask is not None:
        if organ_mask.shape != volume.shape:
            raise ValidationError(
                f"organ mask shape {organ_mask.shape} != volume shape {volume.shape}"
            )
        fill = config.outside_fill
        if fill is None:
            if not config.clips:
                raise ValidationError("outside_fill is required when masking without clipping")
            fill = config.clip_lo
        arr = np.where(organ_mask.data == 0, np.float64(fill), arr)
    if config.rescale:
        lo = float(arr.min())
        hi = float(arr.max())
        if hi > lo:
            arr = (arr - lo) / (hi - lo)
        else:
            arr = np.zeros_like(arr)
    return Volume(arr.astype(np.float32), volume.spacing_mm)
