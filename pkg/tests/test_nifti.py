import struct

import numpy as np
import pytest

from iwseg import ValidationError, load_nifti

DTYPE_TO_CODE = {np.uint8: (2, 8), np.int16: (4, 16), np.float32: (16, 32), np.float64: (64, 64)}


def build_nifti(
    data_zyx: np.ndarray,
    spacing_xyz=(1.0, 1.0, 1.0),
    endian="<",
    magic=b"n+1\x00",
    scl=(0.0, 0.0),
    vox_offset=352,
    dim0=3,
    datatype_code=None,
) -> bytes:
    """Assemble a single-file NIfTI-1 blob field by field."""
    code, bitpix = DTYPE_TO_CODE[data_zyx.dtype.type]
    if datatype_code is not None:
        code = datatype_code
    header = bytearray(348)
    struct.pack_into(endian + "i", header, 0, 348)
    nz, ny, nx = data_zyx.shape
    struct.pack_into(endian + "8h", header, 40, dim0, nx, ny, nz, 1, 1, 1, 1)
    struct.pack_into(endian + "h", header, 70, code)
    struct.pack_into(endian + "h", header, 72, bitpix)
    sx, sy, sz = spacing_xyz
    struct.pack_into(endian + "8f", header, 76, 1.0, sx, sy, sz, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into(endian + "f", header, 108, float(vox_offset))
    struct.pack_into(endian + "f", header, 112, float(scl[0]))
    struct.pack_into(endian + "f", header, 116, float(scl[1]))
    header[344:348] = magic
    payload = data_zyx.astype(data_zyx.dtype.newbyteorder(endian)).tobytes()
    return bytes(header) + b"\x00" * (vox_offset - 348) + payload


def test_minimal_f32_cube(tmp_path):
    data = np.arange(8, dtype=np.float32).reshape(2, 2, 2)
    path = tmp_path / "cube.nii"
    path.write_bytes(build_nifti(data))
    v = load_nifti(path)
    assert v.shape == (2, 2, 2)
    assert v.spacing_mm == (1.0, 1.0, 1.0)
    assert v.dtype_name == "f32"
    np.testing.assert_array_equal(v.data, data)


def test_axis_order_and_spacing_reversed_to_zyx(tmp_path):
    # nx=3, ny=2, nz=1 with x-fastest payload must land at [z, y, x]
    data = np.arange(6, dtype=np.int16).reshape(1, 2, 3)
    path = tmp_path / "aniso.nii"
    path.write_bytes(build_nifti(data, spacing_xyz=(1.0, 2.0, 3.0)))
    v = load_nifti(path)
    assert v.shape == (1, 2, 3)
    assert v.spacing_mm == (3.0, 2.0, 1.0)
    np.testing.assert_array_equal(v.data, data)


def test_big_endian_decodes_identically(tmp_path):
    data = np.arange(8, dtype=np.float64).reshape(2, 2, 2) * 0.5
    path = tmp_path / "be.nii"
    path.write_bytes(build_nifti(data, endian=">"))
    v = load_nifti(path)
    np.testing.assert_array_equal(v.data, data)
    assert v.data.dtype == np.float64


def test_scl_slope_and_inter_applied(tmp_path):
    data = np.arange(8, dtype=np.uint8).reshape(2, 2, 2)
    path = tmp_path / "scaled.nii"
    path.write_bytes(build_nifti(data, scl=(2.0, -1.0)))
    v = load_nifti(path)
    assert v.dtype_name == "f32"
    np.testing.assert_allclose(v.data, data.astype(np.float32) * 2.0 - 1.0)


def test_identity_scaling_keeps_dtype(tmp_path):
    data = np.arange(8, dtype=np.uint8).reshape(2, 2, 2)
    path = tmp_path / "ident.nii"
    path.write_bytes(build_nifti(data, scl=(1.0, 0.0)))
    v = load_nifti(path)
    assert v.dtype_name == "u8"
    np.testing.assert_array_equal(v.data, data)


def test_gzip_payload_rejected(tmp_path):
    path = tmp_path / "c.nii"
    path.write_bytes(b"\x1f\x8b" + b"\x00" * 400)
    with pytest.raises(ValidationError, match="compressed NIfTI unsupported"):
        load_nifti(path)


def test_unsupported_datatype_rejected(tmp_path):
    data = np.zeros((2, 2, 2), dtype=np.float32)
    path = tmp_path / "i32.nii"
    path.write_bytes(build_nifti(data, datatype_code=8))
    with pytest.raises(ValidationError, match="unsupported datatype"):
        load_nifti(path)


def test_non_3d_rejected(tmp_path):
    data = np.zeros((2, 2, 2), dtype=np.float32)
    path = tmp_path / "4d.nii"
    path.write_bytes(build_nifti(data, dim0=4))
    with pytest.raises(ValidationError, match="3D"):
        load_nifti(path)


def test_truncated_header_rejected(tmp_path):
    path = tmp_path / "short.nii"
    path.write_bytes(b"\x00" * 100)
    with pytest.raises(ValidationError, match="header length"):
        load_nifti(path)


def test_wrong_sizeof_hdr_rejected(tmp_path):
    data = np.zeros((1, 1, 1), dtype=np.float32)
    blob = bytearray(build_nifti(data))
    struct.pack_into("<i", blob, 0, 349)
    path = tmp_path / "hdr.nii"
    path.write_bytes(bytes(blob))
    with pytest.raises(ValidationError, match="header length"):
        load_nifti(path)


def test_detached_pair_magic_rejected(tmp_path):
    data = np.zeros((1, 1, 1), dtype=np.float32)
    path = tmp_path / "pair.nii"
    path.write_bytes(build_nifti(data, magic=b"ni1\x00"))
    with pytest.raises(ValidationError, match="magic"):
        load_nifti(path)


def test_truncated_payload_rejected(tmp_path):
    data = np.zeros((2, 2, 2), dtype=np.float32)
    blob = build_nifti(data)
    path = tmp_path / "trunc.nii"
    path.write_bytes(blob[:-8])
    with pytest.raises(ValidationError, match="truncated"):
        load_nifti(path)


def test_zero_pixdim_rejected(tmp_path):
    data = np.zeros((2, 2, 2), dtype=np.float32)
    path = tmp_path / "pix.nii"
    path.write_bytes(build_nifti(data, spacing_xyz=(0.0, 1.0, 1.0)))
    with pytest.raises(ValidationError, match="pixdim"):
        load_nifti(path)
