"""Input validation helpers shared by the estimator-style entry points."""

from __future__ import annotations

import numpy as np

from .volume import ScalarVolume, VolumeMeta


def as_scalar_volume(X) -> ScalarVolume:
    """Accept a ScalarVolume or a 3D array indexed [z, y, x]."""
    if isinstance(X, ScalarVolume):
        return X
    arr = np.asarray(X, dtype=np.float32)
    if arr.ndim != 3:
        raise ValueError(f"expected a 3D volume, got shape {arr.shape}")
    nz, ny, nx = arr.shape
    meta = VolumeMeta(dims=(nx, ny, nz), dtype="f32",
                      scalar_range=(float(arr.min()), float(arr.max())))
    return ScalarVolume(meta=meta, data=arr.reshape(-1))


def check_labeling_matches(labeling, vol: ScalarVolume) -> None:
    if labeling.labels.size != vol.meta.voxel_count:
        raise ValueError(
            f"labeling covers {labeling.labels.size} voxels, volume has "
            f"{vol.meta.voxel_count}"
        )
    if labeling.dims != vol.meta.dims:
        raise ValueError(f"labeling dims {labeling.dims} != volume dims {vol.meta.dims}")


def check_voxels_in_bounds(voxels, dims) -> np.ndarray:
    pts = np.asarray(voxels, dtype=np.int64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise ValueError("expected a non-empty list of (x, y, z) voxel coordinates")
    for axis in range(3):
        if np.any(pts[:, axis] < 0) or np.any(pts[:, axis] >= dims[axis]):
            raise ValueError(f"voxel coordinate out of bounds on axis {axis}")
    return pts
