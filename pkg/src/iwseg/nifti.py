"""Reader for a restricted NIfTI-1 subset: uncompressed single-file 3D volumes.

Supported: magic ``n+1``, datatype codes 2 (u8), 4 (i16), 16 (f32), 64 (f64),
either byte order (detected from the header length field). ``scl_slope`` /
``scl_inter`` are applied when the slope is nonzero. Everything else —
gzip payloads, detached ``.hdr``/``.img`` pairs, 4D data — is rejected.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .volume import PathLike, Volume

HEADER_SIZE = 348

#: NIfTI-1 datatype code -> numpy dtype.
DATATYPE_CODES = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    16: np.dtype(np.float32),
    64: np.dtype(np.float64),
}


def load_nifti(path: PathLike) -> Volume:
    """Load an uncompressed single-file NIfTI-1 volume as (z, y, x) data.

    NIfTI stores x fastest, so the payload maps directly onto the volume's
    C-ordered (z, y, x) layout; spacing comes from ``pixdim[1..3]`` reversed.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"missing NIfTI file: {path}")
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read NIfTI file {path}: {exc}") from exc
    if blob[:2] == b"\x1f\x8b":
        raise ValidationError(f"compressed NIfTI unsupported: {path}")
    if len(blob) < HEADER_SIZE:
        raise ValidationError(f"{path}: header length != {HEADER_SIZE} bytes")

    if struct.unpack("<i", blob[0:4])[0] == HEADER_SIZE:
        end = "<"
    elif struct.unpack(">i", blob[0:4])[0] == HEADER_SIZE:
        end = ">"
    else:
        raise ValidationError(f"{path}: header length != {HEADER_SIZE} (not NIfTI-1)")

    magic = blob[344:348]
    if magic != b"n+1\x00":
        raise ValidationError(
            f"{path}: unsupported magic {magic!r} (only single-file 'n+1' NIfTI-1)"
        )

    dim = struct.unpack(end + "8h", blob[40:56])
    datatype = struct.unpack(end + "h", blob[70:72])[0]
    pixdim = struct.unpack(end + "8f", blob[76:108])
    vox_offset = struct.unpack(end + "f", blob[108:112])[0]
    scl_slope = struct.unpack(end + "f", blob[112:116])[0]
    scl_inter = struct.unpack(end + "f", blob[116:120])[0]

    if dim[0] != 3:
        raise ValidationError(f"{path}: expected 3D data (dim[0] == 3), got dim[0] == {dim[0]}")
    nx, ny, nz = dim[1], dim[2], dim[3]
    if min(nx, ny, nz) < 1:
        raise ValidationError(f"{path}: non-positive dimensions {(nx, ny, nz)}")
    if datatype not in DATATYPE_CODES:
        raise ValidationError(f"{path}: unsupported datatype code {datatype}")
    dtype = DATATYPE_CODES[datatype]

    spacing_xyz = pixdim[1:4]
    if not all(np.isfinite(s) and s > 0 for s in spacing_xyz):
        raise ValidationError(f"{path}: pixdim[1..3] must be finite and positive, got {spacing_xyz}")

    offset = int(round(vox_offset))
    if offset < HEADER_SIZE:
        raise ValidationError(f"{path}: vox_offset {vox_offset} points inside the header")
    count = nx * ny * nz
    nbytes = count * dtype.itemsize
    if len(blob) < offset + nbytes:
        raise ValidationError(
            f"{path}: payload truncated, need {nbytes} bytes at offset {offset}"
        )

    arr = np.frombuffer(blob, dtype=dtype.newbyteorder(end), count=count, offset=offset)
    arr = arr.reshape((nz, ny, nx)).astype(dtype)  # x fastest on disk == C order (z, y, x)

    if scl_slope != 0.0 and not (scl_slope == 1.0 and scl_inter == 0.0):
        arr = arr.astype(np.float32) * np.float32(scl_slope) + np.float32(scl_inter)

    spacing_zyx = (float(spacing_xyz[2]), float(spacing_xyz[1]), float(spacing_xyz[0]))
    return Volume(arr, spacing_zyx)
