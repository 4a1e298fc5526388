"""Dense 3D volumes with physical voxel spacing, file I/O and resampling.

Voxel storage order is x-fastest throughout the toolkit: the linear index of
voxel (x, y, z) is ``x + nx*(y + ny*z)``.  Arrays are kept Fortran-contiguous
with shape (nx, ny, nz), so ``data.ravel(order="F")`` enumerates voxels in
linear-index order and ``data.T`` is a C-contiguous [z, y, x] view that the
compiled kernels can iterate without copying.

Two file formats are supported:

* NIfTI-1 single-file ``.nii`` (magic ``n+1``), datatypes uint8/int16/float32,
  honoring dim, pixdim and scl_slope/scl_inter.  Everything else is ignored on
  read and zeroed on write.
* A raw interchange pair: ``<name>.json`` sidecar
  ``{dims, spacing, dtype, order: "x-fastest", byte_order: "little"}`` next to
  a flat little-endian ``<name>.bin`` blob.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import DegenerateOutputError, FormatError, ParameterError, UnsupportedFormatError

_NIFTI_DTYPES = {2: np.dtype("<u1"), 4: np.dtype("<i2"), 16: np.dtype("<f4")}
_NIFTI_CODES = {np.dtype("uint8"): (2, 8), np.dtype("int16"): (4, 16), np.dtype("float32"): (16, 32)}
_RAW_DTYPES = {"uint8": "<u1", "int16": "<i2", "float32": "<f4", "float64": "<f8"}


def linear_index(x, y, z, dims):
    """Linear index of voxel (x, y, z) under the x-fastest convention."""
    return x + dims[0] * (y + dims[1] * z)


def unravel_index(idx, dims):
    """Inverse of :func:`linear_index`."""
    nx, ny, _ = dims
    x = idx % nx
    rest = idx // nx
    return (x, rest % ny, rest // ny)


def _as_spacing(spacing):
    s = tuple(float(v) for v in spacing)
    if len(s) != 3 or any(not np.isfinite(v) or v <= 0 for v in s):
        raise ParameterError(f"spacing must be three positive finite values, got {spacing}")
    return s


@dataclass(frozen=True)
class Volume3D:
    """Scalar intensity grid; ``data`` is float32, F-contiguous, (nx, ny, nz)."""

    data: np.ndarray
    spacing: tuple

    def __post_init__(self):
        arr = np.asfortranarray(self.data, dtype=np.float32)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ParameterError(f"volume data must be 3D with positive dims, got shape {arr.shape}")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing", _as_spacing(self.spacing))

    @property
    def dims(self):
        return self.data.shape

    @property
    def intensity_range(self):
        return float(self.data.min()), float(self.data.max())


@dataclass(frozen=True)
class BinaryVolume:
    """Boolean foreground grid sharing the Volume3D layout conventions."""

    bits: np.ndarray
    spacing: tuple

    def __post_init__(self):
        arr = np.asfortranarray(self.bits, dtype=bool)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ParameterError(f"binary data must be 3D with positive dims, got shape {arr.shape}")
        object.__setattr__(self, "bits", arr)
        object.__setattr__(self, "spacing", _as_spacing(self.spacing))

    @property
    def dims(self):
        return self.bits.shape

    @property
    def foreground_count(self):
        return int(self.bits.sum())


def _read_nifti(path: Path) -> Volume3D:
    blob = path.read_bytes()
    if len(blob) < 348:
        raise FormatError(f"{path}: header truncated (sizeof_hdr region missing)")
    (sizeof_hdr,) = struct.unpack_from("<i", blob, 0)
    if sizeof_hdr != 348:
        raise FormatError(f"{path}: sizeof_hdr is {sizeof_hdr}, expected 348")
    magic = blob[344:348]
    if magic[:3] != b"n+1":
        raise FormatError(f"{path}: magic is {magic!r}, expected 'n+1'")
    dim = struct.unpack_from("<8h", blob, 40)
    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise FormatError(f"{path}: dim[0] is {ndim}, expected 1..7")
    if any(d > 1 for d in dim[4 : 1 + max(3, ndim)]):
        raise UnsupportedFormatError(f"{path}: only 3D volumes supported, dim={dim[: ndim + 1]}")
    dims = tuple(max(1, d) for d in dim[1:4])
    if any(d < 1 for d in dim[1 : min(ndim, 3) + 1]):
        raise FormatError(f"{path}: dim contains non-positive extent {dim[1:4]}")
    (datatype, bitpix) = struct.unpack_from("<2h", blob, 70)
    if datatype not in _NIFTI_DTYPES:
        raise UnsupportedFormatError(f"{path}: datatype code {datatype} not supported")
    dtype = _NIFTI_DTYPES[datatype]
    if bitpix != dtype.itemsize * 8:
        raise FormatError(f"{path}: bitpix {bitpix} inconsistent with datatype {datatype}")
    pixdim = struct.unpack_from("<8f", blob, 76)
    spacing = pixdim[1:4]
    if any(not np.isfinite(s) or s <= 0 for s in spacing):
        raise FormatError(f"{path}: pixdim {pixdim[1:4]} must be positive")
    (vox_offset,) = struct.unpack_from("<f", blob, 108)
    offset = int(vox_offset)
    if offset < 348:
        raise FormatError(f"{path}: vox_offset {vox_offset} below header size")
    scl_slope, scl_inter = struct.unpack_from("<2f", blob, 112)
    n = dims[0] * dims[1] * dims[2]
    raw = blob[offset : offset + n * dtype.itemsize]
    if len(raw) < n * dtype.itemsize:
        raise FormatError(f"{path}: data section holds {len(raw)} bytes, expected {n * dtype.itemsize}")
    flat = np.frombuffer(raw, dtype=dtype).astype(np.float32)
    if scl_slope not in (0.0, 1.0) or scl_inter != 0.0:
        if scl_slope != 0.0:
            flat = flat * np.float32(scl_slope) + np.float32(scl_inter)
    data = flat.reshape(dims, order="F")
    return Volume3D(data=data, spacing=spacing)


def _write_nifti(path: Path, arr: np.ndarray, spacing) -> None:
    dtype = np.dtype(arr.dtype)
    datatype, bitpix = _NIFTI_CODES[dtype]
    hdr = bytearray(348)
    struct.pack_into("<i", hdr, 0, 348)
    struct.pack_into("<8h", hdr, 40, 3, arr.shape[0], arr.shape[1], arr.shape[2], 1, 1, 1, 1)
    struct.pack_into("<2h", hdr, 70, datatype, bitpix)
    struct.pack_into("<8f", hdr, 76, 0.0, spacing[0], spacing[1], spacing[2], 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", hdr, 108, 352.0)
    struct.pack_into("<2f", hdr, 112, 1.0, 0.0)
    hdr[344:348] = b"n+1\x00"
    body = np.ascontiguousarray(arr.ravel(order="F")).astype(dtype.newbyteorder("<")).tobytes()
    path.write_bytes(bytes(hdr) + b"\x00" * 4 + body)


def _raw_blob_path(json_path: Path) -> Path:
    return json_path.with_suffix(".bin")


def _read_raw(path: Path):
    try:
        sidecar = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: sidecar is not valid JSON ({exc})") from exc
    for key in ("dims", "spacing", "dtype", "order"):
        if key not in sidecar:
            raise FormatError(f"{path}: sidecar missing field '{key}'")
    if sidecar["order"] != "x-fastest":
        raise UnsupportedFormatError(f"{path}: order {sidecar['order']!r} not supported")
    if sidecar["dtype"] not in _RAW_DTYPES:
        raise UnsupportedFormatError(f"{path}: dtype {sidecar['dtype']!r} not supported")
    dims = tuple(int(d) for d in sidecar["dims"])
    if len(dims) != 3 or min(dims) < 1:
        raise FormatError(f"{path}: dims field {sidecar['dims']} must be three positive integers")
    dtype = np.dtype(_RAW_DTYPES[sidecar["dtype"]])
    blob = _raw_blob_path(path).read_bytes()
    n = dims[0] * dims[1] * dims[2]
    if len(blob) != n * dtype.itemsize:
        raise FormatError(f"{path}: blob holds {len(blob)} bytes, expected {n * dtype.itemsize}")
    flat = np.frombuffer(blob, dtype=dtype)
    data = flat.reshape(dims, order="F")
    spacing = sidecar["spacing"]
    if sidecar["dtype"] == "uint8" and bool(sidecar.get("binary", False)):
        return BinaryVolume(bits=data > 0, spacing=spacing)
    return Volume3D(data=data.astype(np.float32), spacing=spacing)


def _write_raw(path: Path, arr: np.ndarray, spacing, dtype_name: str, binary: bool) -> None:
    dtype = np.dtype(_RAW_DTYPES[dtype_name])
    sidecar = {
        "dims": list(arr.shape),
        "spacing": list(spacing),
        "dtype": dtype_name,
        "order": "x-fastest",
        "byte_order": "little",
        "binary": binary,
    }
    path.write_text(json.dumps(sidecar, indent=2) + "\n")
    _raw_blob_path(path).write_bytes(np.ascontiguousarray(arr.ravel(order="F")).astype(dtype).tobytes())


def read_volume(path):
    """Read a ``.nii`` or raw-sidecar ``.json`` volume from disk."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"volume file not found: {path}")
    if path.suffix == ".nii":
        return _read_nifti(path)
    if path.suffix == ".json":
        return _read_raw(path)
    raise UnsupportedFormatError(f"{path}: unknown volume extension {path.suffix!r}")


def write_volume(vol, path):
    """Write a Volume3D or BinaryVolume; format chosen by extension."""
    path = Path(path)
    if isinstance(vol, BinaryVolume):
        arr, spacing = vol.bits.astype(np.uint8), vol.spacing
        dtype_name, binary = "uint8", True
    elif isinstance(vol, Volume3D):
        arr, spacing = vol.data, vol.spacing
        dtype_name, binary = "float32", False
    else:
        raise ParameterError(f"cannot write object of type {type(vol).__name__}")
    if min(arr.shape) < 1:
        raise ParameterError(f"refusing to write volume with degenerate dims {arr.shape}")
    try:
        if path.suffix == ".nii":
            _write_nifti(path, arr, spacing)
        elif path.suffix == ".json":
            _write_raw(path, arr, spacing, dtype_name, binary)
        else:
            raise UnsupportedFormatError(f"{path}: unknown volume extension {path.suffix!r}")
    except OSError as exc:
        raise OSError(f"failed writing volume to {path}: {exc}") from exc


def resample_isotropic(vol, target):
    """Resample onto an isotropic grid of `target` mm via trilinear interpolation.

    Output dims are round(dim_i * spacing_i / target), border samples clamp to
    the edge voxels, and binary volumes are re-thresholded at 0.5.
    """
    if not np.isfinite(target) or target <= 0:
        raise ParameterError(f"target spacing must be positive, got {target}")
    binary = isinstance(vol, BinaryVolume)
    data = vol.bits.astype(np.float32) if binary else vol.data
    dims = data.shape
    spacing = vol.spacing
    out_dims = tuple(int(round(d * s / target)) for d, s in zip(dims, spacing))
    if min(out_dims) < 1:
        raise DegenerateOutputError(
            f"target {target} mm exceeds the physical extent along an axis (dims {dims}, spacing {spacing})"
        )
    if out_dims == dims and all(abs(s - target) < 1e-12 for s in spacing):
        return vol
    axes = [np.arange(n, dtype=np.float64) * (target / s) for n, s in zip(out_dims, spacing)]
    grid = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.ravel() for g in grid])
    out = map_coordinates(data.astype(np.float64), coords, order=1, mode="nearest")
    out = out.reshape(out_dims)
    if binary:
        return BinaryVolume(bits=out >= 0.5, spacing=(target,) * 3)
    return Volume3D(data=out.astype(np.float32), spacing=(target,) * 3)


def threshold_initial(vol: Volume3D, percentile: float = 0.98, mask=None):
    """Constant-threshold initial labeling: class 2 above the intensity
    percentile, class 1 below, evaluated inside the brain mask.

    The default mask is every voxel with intensity > 0; pass an explicit
    boolean array to override.
    """
    from .hmrf import LabelMap

    if not 0.0 < percentile < 1.0:
        raise ParameterError(f"percentile must lie in (0, 1), got {percentile}")
    if mask is None:
        mask = vol.data > 0
    else:
        mask = np.asfortranarray(mask, dtype=bool)
        if mask.shape != vol.dims:
            raise ParameterError(f"mask shape {mask.shape} does not match volume dims {vol.dims}")
    values = vol.data[mask]
    if values.size == 0 or np.unique(values).size < 2:
        raise ParameterError("volume has fewer than 2 distinct intensities inside the mask")
    thr = float(np.quantile(values.astype(np.float64), percentile))
    labels = np.where(vol.data >= thr, 2, 1).astype(np.uint8)
    labels[~mask] = 0
    return LabelMap(labels=labels, mask=mask)
