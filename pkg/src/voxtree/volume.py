"""Scalar volume loading, synthesis, preprocessing and slicing.

Voxel data is kept as a flat float32 array in x-fastest order (x, then y,
then z), which matches the on-disk raw format byte for byte. The 3D view
returned by :meth:`ScalarVolume.as_3d` is therefore indexed ``[z, y, x]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.ndimage import correlate1d

DTYPES = {
    "u8": np.dtype("<u1"),
    "u16": np.dtype("<u2"),
    "i16": np.dtype("<i2"),
    "f32": np.dtype("<f4"),
}

AXES = {"x": 0, "y": 1, "z": 2}


class VolumeFormatError(ValueError):
    """Raised when a raw file or sidecar does not match its declared shape."""


@dataclass
class VolumeMeta:
    dims: tuple[int, int, int]                  # voxels per axis (nx, ny, nz)
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    dtype: str = "f32"
    endianness: str = "little"
    scalar_range: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.spacing = tuple(float(s) for s in self.spacing)
        if len(self.dims) != 3 or any(d < 1 for d in self.dims):
            raise ValueError(f"dims must be 3 positive integers, got {self.dims}")
        if self.dtype not in DTYPES:
            raise ValueError(f"dtype must be one of {sorted(DTYPES)}, got {self.dtype!r}")
        if self.endianness != "little":
            raise ValueError("only little-endian volumes are supported")
        if self.scalar_range[0] > self.scalar_range[1]:
            raise ValueError(f"invalid scalar_range {self.scalar_range}")

    @property
    def voxel_count(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "spacing": list(self.spacing),
            "dtype": self.dtype,
            "endianness": self.endianness,
            "scalar_range": [float(self.scalar_range[0]), float(self.scalar_range[1])],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VolumeMeta":
        return cls(
            dims=tuple(d["dims"]),
            spacing=tuple(d.get("spacing", (1.0, 1.0, 1.0))),
            dtype=d.get("dtype", "f32"),
            endianness=d.get("endianness", "little"),
            scalar_range=tuple(d.get("scalar_range", (0.0, 0.0))),
        )


@dataclass
class ScalarVolume:
    """Dense float32 volume; immutable by convention once constructed."""

    meta: VolumeMeta
    data: np.ndarray                # flat float32, x-fastest
    normalized: bool = False

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32).reshape(-1)
        if self.data.size != self.meta.voxel_count:
            raise VolumeFormatError(
                f"data length {self.data.size} does not match dims {self.meta.dims}"
            )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.meta.dims

    def as_3d(self) -> np.ndarray:
        """View of the data indexed ``[z, y, x]`` (no copy)."""
        nx, ny, nz = self.meta.dims
        return self.data.reshape(nz, ny, nx)

    def value_at(self, x: int, y: int, z: int) -> float:
        nx, ny, _ = self.meta.dims
        return float(self.data[x + nx * (y + ny * z)])

    def normalize(self) -> "ScalarVolume":
        """Rescale values to [0, 1] using the stored scalar range."""
        lo, hi = self.meta.scalar_range
        if hi > lo:
            data = (self.data - lo) / (hi - lo)
        else:
            data = np.zeros_like(self.data)
        meta = replace(self.meta, scalar_range=(0.0, 1.0) if hi > lo else (0.0, 0.0))
        return ScalarVolume(meta=meta, data=data, normalized=True)


def _recompute_range(meta: VolumeMeta, data: np.ndarray) -> VolumeMeta:
    return replace(meta, scalar_range=(float(data.min()), float(data.max())))


def load_sidecar(path) -> VolumeMeta:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"sidecar file not found: {path}")
    with open(path) as f:
        return VolumeMeta.from_dict(json.load(f))


def load_raw_volume(path, meta: VolumeMeta) -> ScalarVolume:
    """Load a headerless little-endian raw volume and convert it to float32.

    The file size must equal dims product times the dtype width; the scalar
    range is recomputed from the actual data.
    """
    path = Path(path)
    dtype = DTYPES[meta.dtype]
    expected = meta.voxel_count * dtype.itemsize
    actual = path.stat().st_size
    if actual != expected:
        raise VolumeFormatError(
            f"{path}: file size {actual} does not match dims {meta.dims} "
            f"x dtype {meta.dtype} (expected {expected})"
        )
    raw = np.fromfile(path, dtype=dtype)
    data = raw.astype(np.float32)
    return ScalarVolume(meta=_recompute_range(meta, data), data=data)


def save_raw_volume(vol: ScalarVolume, path, sidecar_path=None) -> None:
    """Write the working float32 representation plus an optional sidecar."""
    vol.data.astype("<f4").tofile(path)
    if sidecar_path is not None:
        meta = replace(vol.meta, dtype="f32")
        with open(sidecar_path, "w") as f:
            json.dump(meta.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


@dataclass
class SpherePhantomSpec:
    """Synthetic volume made of intensity spheres over a flat background."""

    dims: tuple[int, int, int]
    spheres: list = field(default_factory=list)  # (center xyz, radius, intensity)
    background: float = 0.0
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        for center, radius, intensity in self.spheres:
            if radius <= 0:
                raise ValueError("sphere radii must be positive")
            if intensity == self.background:
                raise ValueError(
                    "sphere intensity must differ from background for a usable ground truth"
                )

    @classmethod
    def from_dict(cls, d: dict) -> "SpherePhantomSpec":
        spheres = [
            (tuple(s["center"]), float(s["radius"]), float(s["intensity"]))
            for s in d.get("spheres", [])
        ]
        return cls(
            dims=tuple(d["dims"]),
            spheres=spheres,
            background=float(d.get("background", 0.0)),
            noise_sigma=float(d.get("noise_sigma", 0.0)),
            rng_seed=int(d.get("rng_seed", 0)),
        )


def generate_spheres_phantom(spec: SpherePhantomSpec) -> tuple[ScalarVolume, np.ndarray]:
    """Rasterize the phantom; returns the volume and a per-voxel label array.

    Label 0 is background, label i the i-th sphere (first containing sphere
    wins). Noise is Gaussian, seeded, added after rasterization.
    """
    nx, ny, nz = spec.dims
    zz, yy, xx = np.meshgrid(
        np.arange(nz, dtype=np.float64),
        np.arange(ny, dtype=np.float64),
        np.arange(nx, dtype=np.float64),
        indexing="ij",
    )
    values = np.full((nz, ny, nx), spec.background, dtype=np.float64)
    truth = np.zeros((nz, ny, nx), dtype=np.uint32)
    # iterate in reverse so the first listed sphere wins overlaps
    for i in range(len(spec.spheres) - 1, -1, -1):
        (cx, cy, cz), radius, intensity = spec.spheres[i]
        inside = (xx - cx) ** 2 + (yy - cy) ** 2 + (zz - cz) ** 2 <= radius**2
        values[inside] = intensity
        truth[inside] = i + 1
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.rng_seed)
        values = values + rng.normal(0.0, spec.noise_sigma, size=values.shape)
    data = values.reshape(-1).astype(np.float32)
    meta = VolumeMeta(dims=spec.dims, dtype="f32")
    return ScalarVolume(meta=_recompute_range(meta, data), data=data), truth.reshape(-1)


def gaussian_smooth(vol: ScalarVolume, sigma: float) -> ScalarVolume:
    """Separable Gaussian blur with kernel radius ceil(3*sigma), clamped edges.

    sigma = 0 returns a copy with identical data.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return ScalarVolume(meta=vol.meta, data=vol.data.copy(), normalized=vol.normalized)
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    kernel /= kernel.sum()
    out = vol.as_3d().astype(np.float64)
    for axis in range(3):
        out = correlate1d(out, kernel, axis=axis, mode="nearest")
    data = out.reshape(-1).astype(np.float32)
    return ScalarVolume(meta=_recompute_range(vol.meta, data), data=data,
                        normalized=vol.normalized)


def slice_extract(vol: ScalarVolume, axis: str, index: int) -> np.ndarray:
    """Extract the plane orthogonal to ``axis`` at ``index``.

    The returned 2D array is row-major with the lower remaining axis varying
    fastest (columns), e.g. axis='z' gives rows along y and columns along x.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    ax = AXES[axis]
    n = vol.meta.dims[ax]
    if not 0 <= index < n:
        raise IndexError(f"slice index {index} out of range for axis {axis} (size {n})")
    arr = vol.as_3d()
    if axis == "z":
        return arr[index, :, :].copy()
    if axis == "y":
        return arr[:, index, :].copy()
    return arr[:, :, index].copy()
