import struct

import numpy as np
import pytest

from vesselkit.errors import DegenerateOutputError, FormatError, ParameterError, UnsupportedFormatError
from vesselkit.volume import (
    BinaryVolume,
    Volume3D,
    linear_index,
    read_volume,
    resample_isotropic,
    threshold_initial,
    unravel_index,
    write_volume,
)


def rand_volume(rng, dims=(5, 4, 3), spacing=(0.7, 0.8, 1.1)):
    return Volume3D(data=rng.random(dims).astype(np.float32) * 100, spacing=spacing)


def test_linear_index_roundtrip():
    dims = (5, 7, 3)
    for idx in range(5 * 7 * 3):
        x, y, z = unravel_index(idx, dims)
        assert linear_index(x, y, z, dims) == idx


def test_raw_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    vol = rand_volume(rng, dims=(2, 2, 2))
    write_volume(vol, tmp_path / "v.json")
    back = read_volume(tmp_path / "v.json")
    assert back.dims == vol.dims
    assert back.spacing == vol.spacing
    assert np.array_equal(back.data, vol.data)


def test_nifti_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    vol = rand_volume(rng, dims=(6, 5, 4), spacing=(0.52, 0.52, 0.8))
    write_volume(vol, tmp_path / "v.nii")
    back = read_volume(tmp_path / "v.nii")
    assert back.dims == vol.dims
    assert np.allclose(back.spacing, vol.spacing, atol=1e-6)
    assert np.array_equal(back.data, vol.data)


def test_nifti_header_spacing(tmp_path):
    vol = Volume3D(data=np.zeros((64, 64, 40), np.float32) + 7, spacing=(0.52, 0.52, 0.8))
    write_volume(vol, tmp_path / "v.nii")
    back = read_volume(tmp_path / "v.nii")
    assert np.allclose(back.spacing, (0.52, 0.52, 0.8), atol=1e-6)


def test_nifti_bad_magic(tmp_path):
    vol = rand_volume(np.random.default_rng(2))
    path = tmp_path / "v.nii"
    write_volume(vol, path)
    blob = bytearray(path.read_bytes())
    blob[344:348] = b"bad\x00"
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError, match="magic"):
        read_volume(path)


def test_nifti_unsupported_datatype(tmp_path):
    vol = rand_volume(np.random.default_rng(3))
    path = tmp_path / "v.nii"
    write_volume(vol, path)
    blob = bytearray(path.read_bytes())
    struct.pack_into("<h", blob, 70, 64)  # float64 code: structurally valid, unsupported here
    struct.pack_into("<h", blob, 72, 64)
    path.write_bytes(bytes(blob))
    with pytest.raises(UnsupportedFormatError, match="datatype"):
        read_volume(path)


def test_nifti_truncated_header(tmp_path):
    path = tmp_path / "v.nii"
    path.write_bytes(b"\x00" * 100)
    with pytest.raises(FormatError, match="truncated"):
        read_volume(path)


def test_nifti_scl_slope_applied(tmp_path):
    vol = Volume3D(data=np.arange(8, dtype=np.float32).reshape(2, 2, 2), spacing=(1, 1, 1))
    path = tmp_path / "v.nii"
    write_volume(vol, path)
    blob = bytearray(path.read_bytes())
    struct.pack_into("<2f", blob, 112, 2.0, 5.0)
    path.write_bytes(bytes(blob))
    back = read_volume(path)
    assert np.allclose(back.data, vol.data * 2 + 5)


def test_binary_roundtrip_preserves_count(tmp_path):
    rng = np.random.default_rng(4)
    bits = rng.random((6, 6, 6)) < 0.3
    bv = BinaryVolume(bits=bits, spacing=(1, 1, 1))
    write_volume(bv, tmp_path / "b.json")
    back = read_volume(tmp_path / "b.json")
    assert isinstance(back, BinaryVolume)
    assert back.foreground_count == bv.foreground_count
    assert np.array_equal(back.bits, bv.bits)


def test_degenerate_dims_rejected():
    with pytest.raises(ParameterError):
        Volume3D(data=np.zeros((0, 3, 3), np.float32), spacing=(1, 1, 1))
    with pytest.raises(ParameterError):
        Volume3D(data=np.zeros((3, 3), np.float32), spacing=(1, 1, 1))


def test_resample_identity():
    rng = np.random.default_rng(5)
    vol = rand_volume(rng, dims=(8, 8, 8), spacing=(0.5, 0.5, 0.5))
    out = resample_isotropic(vol, 0.5)
    assert out is vol


def test_resample_dims_by_definition():
    vol = Volume3D(data=np.zeros((10, 10, 10), np.float32), spacing=(1, 1, 2))
    out = resample_isotropic(vol, 1.0)
    assert out.dims == (10, 10, 20)
    assert out.spacing == (1.0, 1.0, 1.0)


def test_resample_linear_midpoint():
    # two samples along z valued 0 and 10; the physical midpoint interpolates to 5
    data = np.zeros((1, 1, 2), np.float32)
    data[0, 0, 1] = 10
    vol = Volume3D(data=data, spacing=(1.0, 1.0, 1.0))
    out = resample_isotropic(vol, 0.5)
    assert out.dims == (2, 2, 4)
    # output index j sits at physical z = j*0.5; j=1 is the midpoint
    assert abs(float(out.data[0, 0, 1]) - 5.0) < 1e-6


def test_resample_constant_stays_constant():
    vol = Volume3D(data=np.full((6, 5, 4), 3.25, np.float32), spacing=(0.9, 1.1, 0.7))
    out = resample_isotropic(vol, 0.6)
    assert np.allclose(out.data, 3.25, atol=1e-6)


def test_resample_extent_preserved_within_voxel():
    rng = np.random.default_rng(6)
    vol = rand_volume(rng, dims=(11, 7, 5), spacing=(0.9, 1.3, 2.1))
    target = 0.7
    out = resample_isotropic(vol, target)
    for i in range(3):
        assert abs(out.dims[i] * target - vol.dims[i] * vol.spacing[i]) <= target


def test_resample_binary_rethresholded():
    bits = np.zeros((8, 8, 8), bool)
    bits[2:6, 2:6, 2:6] = True
    bv = BinaryVolume(bits=bits, spacing=(1, 1, 1))
    out = resample_isotropic(bv, 0.5)
    assert isinstance(out, BinaryVolume)
    assert out.bits.dtype == bool
    assert out.dims == (16, 16, 16)


def test_resample_degenerate_target():
    vol = Volume3D(data=np.zeros((4, 4, 4), np.float32), spacing=(1, 1, 1))
    with pytest.raises(DegenerateOutputError):
        resample_isotropic(vol, 50.0)
    with pytest.raises(ParameterError):
        resample_isotropic(vol, -1.0)


def test_threshold_top_five_of_hundred():
    vals = np.arange(1, 101, dtype=np.float32)
    rng = np.random.default_rng(7)
    rng.shuffle(vals)
    vol = Volume3D(data=vals.reshape(5, 5, 4), spacing=(1, 1, 1))
    lm = threshold_initial(vol, 0.95)
    assert int((lm.labels == 2).sum()) == 5
    picked = sorted(vol.data[lm.labels == 2].astype(int).tolist())
    assert picked == [96, 97, 98, 99, 100]


def test_threshold_classes_partition_mask():
    rng = np.random.default_rng(8)
    vol = rand_volume(rng, dims=(6, 6, 6))
    lm = threshold_initial(vol, 0.9)
    inside = lm.mask
    assert set(np.unique(lm.labels[inside]).tolist()) <= {1, 2}
    assert (lm.labels[~inside] == 0).all()
    assert ((lm.labels[inside] == 1) | (lm.labels[inside] == 2)).all()


def test_threshold_constant_image_rejected():
    vol = Volume3D(data=np.full((4, 4, 4), 9.0, np.float32), spacing=(1, 1, 1))
    with pytest.raises(ParameterError, match="distinct"):
        threshold_initial(vol, 0.9)


def test_threshold_percentile_range():
    rng = np.random.default_rng(9)
    vol = rand_volume(rng)
    for bad in (0.0, 1.0, -0.3, 2.0):
        with pytest.raises(ParameterError):
            threshold_initial(vol, bad)


def test_threshold_phantom_containment(toy_phantom):
    vol, binary, truth, *_ = toy_phantom
    frac = binary.bits.mean()
    lm = threshold_initial(vol, 1.0 - frac / 2)  # top half of the vessel fraction
    fg = lm.labels == 2
    assert fg.sum() > 0
    assert (fg & ~binary.bits).sum() / fg.sum() < 0.01
