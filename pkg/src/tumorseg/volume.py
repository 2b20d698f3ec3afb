"""Volume data model, file I/O, continuous sampling, and synthetic phantoms.

A :class:`Volume` is a 3D scalar intensity grid with anisotropic voxel
spacing in millimetres.  Data is stored as a float32 array of shape
``(nx, ny, nz)``; on disk the canonical container is a JSON sidecar plus a
little-endian raw payload, x-fastest.  A read-only subset of NIfTI-1 is
supported for interoperability with real scans.

World coordinates: voxel ``(i, j, k)`` has its center at
``(i * sx, j * sy, k * sz)`` mm.  Points outside the grid sample the
nearest in-bounds voxel (clamping).
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Volume",
    "BinaryMask",
    "PhantomSpec",
    "VolumeFormatError",
    "load_volume",
    "save_volume",
    "sample_intensity",
    "make_phantom",
    "voxel_to_world",
    "world_to_voxel",
]

_CANONICAL_DTYPES = {"int16": np.int16, "float32": np.float32, "uint8": np.uint8}


class VolumeFormatError(ValueError):
    """Raised for malformed or unsupported volume files."""


@dataclass(eq=False)
class Volume:
    """Immutable-by-convention 3D intensity grid.

    data: float32 array, shape (nx, ny, nz), index order [x, y, z].
    spacing: (sx, sy, sz) mm per voxel, all > 0.
    """

    data: np.ndarray
    spacing: tuple[float, float, float]
    intensity_range: tuple[float, float] = field(init=False)

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError(f"volume data must be 3D, got shape {self.data.shape}")
        self.spacing = tuple(float(s) for s in self.spacing)
        if len(self.spacing) != 3 or not all(s > 0 and math.isfinite(s) for s in self.spacing):
            raise ValueError(f"spacing must be three positive finite values, got {self.spacing}")
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        self.data.setflags(write=False)
        self.intensity_range = (float(self.data.min()), float(self.data.max()))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def voxel_volume_mm3(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz

    def world_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(lo, hi) world coordinates of the outermost voxel centers."""
        hi = (np.asarray(self.dims) - 1) * np.asarray(self.spacing)
        return np.zeros(3), hi


@dataclass(eq=False)
class BinaryMask:
    """Voxel-aligned boolean grid sharing the Volume layout conventions."""

    bits: np.ndarray
    spacing: tuple[float, float, float]

    def __post_init__(self):
        if self.bits.ndim != 3:
            raise ValueError(f"mask must be 3D, got shape {self.bits.shape}")
        self.spacing = tuple(float(s) for s in self.spacing)
        if not all(s > 0 and math.isfinite(s) for s in self.spacing):
            raise ValueError(f"spacing must be positive finite, got {self.spacing}")
        self.bits = np.ascontiguousarray(self.bits, dtype=bool)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.bits.shape

    def voxel_volume_mm3(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz


def voxel_to_world(index, spacing) -> np.ndarray:
    """Voxel center of integer index (i, j, k): index * spacing, component-wise."""
    return np.asarray(index, dtype=np.float64) * np.asarray(spacing, dtype=np.float64)


def world_to_voxel(point, spacing) -> np.ndarray:
    """Continuous voxel coordinates of a world point (inverse of voxel_to_world)."""
    return np.asarray(point, dtype=np.float64) / np.asarray(spacing, dtype=np.float64)


# ---------------------------------------------------------------------------
# Canonical container: <name>.vol.json sidecar + raw little-endian payload
# ---------------------------------------------------------------------------

def _write_container(path: Path, array: np.ndarray, spacing, dtype_name: str) -> Path:
    """Write sidecar+raw pair.  `array` is (nx,ny,nz); payload is x-fastest."""
    path = Path(path)
    if path.name.endswith(".vol.json"):
        stem = path.name[: -len(".vol.json")]
    else:
        stem = path.name
        path = path.with_name(stem + ".vol.json")
    raw_name = stem + ".raw"
    np_dtype = np.dtype(_CANONICAL_DTYPES[dtype_name]).newbyteorder("<")
    # x-fastest on disk == C-order of the transposed (nz,ny,nx) view
    payload = np.ascontiguousarray(array.T.astype(np_dtype))
    sidecar = {
        "dims": [int(d) for d in array.shape],
        "spacing_mm": [float(s) for s in spacing],
        "dtype": dtype_name,
        "data_file": raw_name,
        "byte_order": "little",
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    (path.parent / raw_name).write_bytes(payload.tobytes())
    path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def _read_container(path: Path) -> tuple[np.ndarray, tuple, str]:
    path = Path(path)
    try:
        sidecar = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise VolumeFormatError(f"{path}: invalid sidecar JSON: {exc}") from exc
    for key in ("dims", "spacing_mm", "dtype", "data_file"):
        if key not in sidecar:
            raise VolumeFormatError(f"{path}: sidecar missing field {key!r}")
    dims = tuple(int(d) for d in sidecar["dims"])
    spacing = tuple(float(s) for s in sidecar["spacing_mm"])
    if len(dims) != 3 or any(d <= 0 for d in dims):
        raise VolumeFormatError(f"{path}: bad dims {dims}")
    if len(spacing) != 3 or any(s <= 0 for s in spacing):
        raise VolumeFormatError(f"{path}: non-positive spacing {spacing}")
    dtype_name = sidecar["dtype"]
    if dtype_name not in _CANONICAL_DTYPES:
        raise VolumeFormatError(f"{path}: unsupported dtype {dtype_name!r}")
    if sidecar.get("byte_order", "little") != "little":
        raise VolumeFormatError(f"{path}: only little-endian payloads supported")
    raw_path = path.parent / sidecar["data_file"]
    if not raw_path.exists():
        raise VolumeFormatError(f"{path}: data file {raw_path} not found")
    np_dtype = np.dtype(_CANONICAL_DTYPES[dtype_name]).newbyteorder("<")
    payload = raw_path.read_bytes()
    expected = dims[0] * dims[1] * dims[2] * np_dtype.itemsize
    if len(payload) != expected:
        raise VolumeFormatError(
            f"{path}: payload has {len(payload)} bytes, header implies {expected}"
        )
    flat = np.frombuffer(payload, dtype=np_dtype)
    array = flat.reshape(dims[::-1]).T  # x-fastest payload -> (nx,ny,nz)
    return array, spacing, dtype_name


def save_volume(volume: Volume, path, dtype: str = "float32") -> Path:
    """Write a volume in the canonical container.  Returns the sidecar path."""
    if dtype not in ("int16", "float32"):
        raise ValueError(f"volume dtype must be int16 or float32, got {dtype!r}")
    return _write_container(Path(path), volume.data, volume.spacing, dtype)


# ---------------------------------------------------------------------------
# NIfTI-1 subset reader (single .nii, int16/float32, uncompressed, axis-aligned)
# ---------------------------------------------------------------------------

_NIFTI_DTYPES = {4: np.int16, 16: np.float32}


def _load_nifti(path: Path) -> Volume:
    blob = path.read_bytes()
    if len(blob) < 352:
        raise VolumeFormatError(f"{path}: too short for a NIfTI-1 header")
    for bo in ("<", ">"):
        (sizeof_hdr,) = struct.unpack(bo + "i", blob[:4])
        if sizeof_hdr == 348:
            break
    else:
        raise VolumeFormatError(f"{path}: not a NIfTI-1 file (sizeof_hdr != 348)")
    magic = blob[344:348]
    if magic not in (b"n+1\x00", b"ni1\x00"):
        raise VolumeFormatError(f"{path}: bad NIfTI magic {magic!r}")
    if magic == b"ni1\x00":
        raise VolumeFormatError(f"{path}: detached .hdr/.img pairs not supported")
    dim = struct.unpack(bo + "8h", blob[40:56])
    if not (1 <= dim[0] <= 7):
        raise VolumeFormatError(f"{path}: implausible dim[0]={dim[0]}")
    if dim[0] != 3 and not (dim[0] > 3 and all(d <= 1 for d in dim[4 : dim[0] + 1])):
        raise VolumeFormatError(f"{path}: only 3D volumes supported, dim={dim}")
    nx, ny, nz = (max(1, dim[i]) for i in (1, 2, 3))
    (datatype,) = struct.unpack(bo + "h", blob[70:72])
    if datatype not in _NIFTI_DTYPES:
        raise VolumeFormatError(f"{path}: unsupported NIfTI datatype code {datatype}")
    pixdim = struct.unpack(bo + "8f", blob[76:108])
    spacing = tuple(float(p) for p in pixdim[1:4])
    if any(s <= 0 or not math.isfinite(s) for s in spacing):
        raise VolumeFormatError(f"{path}: non-positive pixdim {spacing}")
    (vox_offset,) = struct.unpack(bo + "f", blob[108:112])
    offset = int(vox_offset)
    np_dtype = np.dtype(_NIFTI_DTYPES[datatype]).newbyteorder(bo)
    expected = nx * ny * nz * np_dtype.itemsize
    if len(blob) - offset < expected:
        raise VolumeFormatError(
            f"{path}: payload short: have {len(blob) - offset} bytes, need {expected}"
        )
    flat = np.frombuffer(blob, dtype=np_dtype, count=nx * ny * nz, offset=offset)
    array = flat.reshape((nz, ny, nx)).T  # NIfTI data is x-fastest
    return Volume(data=array.astype(np.float32), spacing=spacing)


def load_volume(path) -> Volume:
    """Load a canonical ``.vol.json`` container or a NIfTI-1 ``.nii`` file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"volume file not found: {path}")
    name = path.name.lower()
    if name.endswith(".vol.json"):
        array, spacing, dtype_name = _read_container(path)
        if dtype_name == "uint8":
            raise VolumeFormatError(f"{path}: uint8 container is a mask, not a volume")
        return Volume(data=array.astype(np.float32), spacing=spacing)
    if name.endswith(".nii"):
        return _load_nifti(path)
    raise VolumeFormatError(f"{path}: unrecognized volume format (expect .vol.json or .nii)")


# ---------------------------------------------------------------------------
# Continuous-space sampling
# ---------------------------------------------------------------------------

def sample_intensity(volume: Volume, points) -> np.ndarray | float:
    """Trilinear interpolation at world-space point(s), clamped at the border.

    `points` is a single (3,) point or an (N, 3) array in mm.  Returns a
    scalar or an (N,) float64 array.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    scalar_input = np.asarray(points).ndim == 1
    u = pts / np.asarray(volume.spacing)
    nx, ny, nz = volume.dims
    dims = np.array([nx, ny, nz], dtype=np.float64)
    u = np.clip(u, 0.0, dims - 1)
    i0 = np.minimum(np.floor(u).astype(np.int64), np.maximum(dims.astype(np.int64) - 2, 0))
    f = u - i0
    d = volume.data
    x0, y0, z0 = i0[:, 0], i0[:, 1], i0[:, 2]
    # single-voxel axes: keep index 0 and zero fraction
    x1 = np.minimum(x0 + 1, nx - 1)
    y1 = np.minimum(y0 + 1, ny - 1)
    z1 = np.minimum(z0 + 1, nz - 1)
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    c000 = d[x0, y0, z0].astype(np.float64)
    c100 = d[x1, y0, z0]
    c010 = d[x0, y1, z0]
    c110 = d[x1, y1, z0]
    c001 = d[x0, y0, z1]
    c101 = d[x1, y0, z1]
    c011 = d[x0, y1, z1]
    c111 = d[x1, y1, z1]
    c00 = c000 * (1 - fx) + c100 * fx
    c10 = c010 * (1 - fx) + c110 * fx
    c01 = c001 * (1 - fx) + c101 * fx
    c11 = c011 * (1 - fx) + c111 * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    out = c0 * (1 - fz) + c1 * fz
    return float(out[0]) if scalar_input else out


# ---------------------------------------------------------------------------
# Synthetic phantoms with analytic ground truth
# ---------------------------------------------------------------------------

@dataclass
class PhantomSpec:
    """Bright-rim phantom standing in for contrast-enhanced tumors.

    The ground-truth mask is the interior plus the rim, with its boundary at
    the rim's outer surface.  A non-zero ``rim_gap_solid_angle`` (steradians)
    replaces the rim with core intensity inside a cone around +z, modelling a
    locally missing bright border.
    """

    shape: str = "sphere"  # sphere | ellipsoid | lobulated
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    radii: tuple[float, float, float] = (20.0, 20.0, 20.0)
    rim_intensity: float = 255.0
    core_intensity: float = 180.0
    background_intensity: float = 0.0
    rim_thickness: float = 3.0
    rim_gap_solid_angle: float = 0.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.shape not in ("sphere", "ellipsoid", "lobulated"):
            raise ValueError(f"unknown phantom shape {self.shape!r}")
        if not (self.rim_intensity > self.core_intensity > self.background_intensity):
            raise ValueError("phantom requires rim > core > background intensity")
        if not (min(self.radii) > self.rim_thickness > 0):
            raise ValueError("phantom requires radii > rim_thickness > 0")
        if self.rim_gap_solid_angle < 0 or self.noise_sigma < 0:
            raise ValueError("rim_gap_solid_angle and noise_sigma must be >= 0")


def _lobulation(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    # deterministic angular bump pattern, amplitude fraction of base radius
    return 0.12 * np.sin(3.0 * theta) * np.cos(2.0 * phi) + 0.08 * np.cos(3.0 * phi)


def make_phantom(spec: PhantomSpec, dims, spacing, seed: int = 0) -> tuple[Volume, BinaryMask]:
    """Build a phantom volume and its analytic ground-truth mask.

    Membership is evaluated at voxel centers.  For the ellipsoid the inner
    surface uses semi-axes shrunk by ``rim_thickness``, so the shell is only
    approximately that thick off-axis.
    """
    dims = tuple(int(d) for d in dims)
    spacing = tuple(float(s) for s in spacing)
    center = np.asarray(spec.center, dtype=np.float64)
    radii = np.asarray(spec.radii, dtype=np.float64)

    lo, hi = np.zeros(3), (np.asarray(dims) - 1) * np.asarray(spacing)
    margin = 2.0 * np.asarray(spacing)
    max_extent = radii.max() * (1.25 if spec.shape == "lobulated" else 1.0)
    if np.any(center - max_extent < lo + margin) or np.any(center + max_extent > hi - margin):
        raise ValueError("phantom exceeds grid bounds (needs a 2-voxel margin)")

    xs = np.arange(dims[0]) * spacing[0]
    ys = np.arange(dims[1]) * spacing[1]
    zs = np.arange(dims[2]) * spacing[2]
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    px, py, pz = gx - center[0], gy - center[1], gz - center[2]
    dist = np.sqrt(px * px + py * py + pz * pz)

    if spec.shape == "sphere":
        r_outer = np.full(dims, radii[0])
    elif spec.shape == "ellipsoid":
        # direction-dependent outer radius: |p| / ellipsoid_norm(p)
        with np.errstate(divide="ignore", invalid="ignore"):
            nrm = np.sqrt((px / radii[0]) ** 2 + (py / radii[1]) ** 2 + (pz / radii[2]) ** 2)
            r_outer = np.where(nrm > 0, dist / np.maximum(nrm, 1e-30), radii.min())
    else:  # lobulated
        with np.errstate(invalid="ignore"):
            theta = np.arccos(np.clip(np.where(dist > 0, pz / np.maximum(dist, 1e-30), 1.0), -1, 1))
        phi = np.arctan2(py, px)
        r_outer = radii[0] * (1.0 + _lobulation(theta, phi))

    inside_outer = dist <= r_outer
    inside_inner = dist <= (r_outer - spec.rim_thickness)
    in_rim = inside_outer & ~inside_inner

    if spec.rim_gap_solid_angle > 0:
        cos_cap = 1.0 - spec.rim_gap_solid_angle / (2.0 * math.pi)
        with np.errstate(invalid="ignore"):
            cos_angle = np.where(dist > 0, pz / np.maximum(dist, 1e-30), 1.0)
        in_gap = cos_angle >= cos_cap
        rim_value = np.where(in_gap, spec.core_intensity, spec.rim_intensity)
    else:
        rim_value = spec.rim_intensity

    data = np.full(dims, spec.background_intensity, dtype=np.float64)
    data[inside_inner] = spec.core_intensity
    data[in_rim] = np.broadcast_to(rim_value, dims)[in_rim] if np.ndim(rim_value) else rim_value

    if spec.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        data = data + rng.normal(0.0, spec.noise_sigma, size=dims)

    volume = Volume(data=data.astype(np.float32), spacing=spacing)
    mask = BinaryMask(bits=inside_outer, spacing=spacing)
    return volume, mask
