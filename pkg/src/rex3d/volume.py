"""Dense 3D scalar volumes: normalization, resampling, synthetic phantoms.

The canonical in-memory layout is a float32 array of shape (x, y, z) whose
flattened form is x-fastest (Fortran order). Every module downstream relies
on that single convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidPhantomSpec

Triple = tuple[int, int, int]


@dataclass
class VoxelGrid:
    """A dense scalar volume with voxel dims and physical spacing."""

    dims: Triple
    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in self.dims):
            raise ValueError(f"all dims must be >= 1, got {self.dims}")
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.shape != self.dims:
            if self.data.size != int(np.prod(self.dims)):
                raise ValueError(
                    f"data size {self.data.size} != prod(dims) {np.prod(self.dims)}"
                )
            self.data = self.data.reshape(self.dims, order="F")
        self.spacing = tuple(float(s) for s in self.spacing)

    @classmethod
    def full(cls, dims: Triple, value: float = 0.0,
             spacing=(1.0, 1.0, 1.0)) -> "VoxelGrid":
        return cls(dims, np.full(dims, value, dtype=np.float32), spacing)

    def copy(self) -> "VoxelGrid":
        return VoxelGrid(self.dims, self.data.copy(), self.spacing)

    def ravel(self) -> np.ndarray:
        """Flat view in the canonical x-fastest order."""
        return self.data.ravel(order="F")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, VoxelGrid)
            and self.dims == other.dims
            and self.spacing == other.spacing
            and np.array_equal(self.data, other.data)
        )


def normalize_intensity(grid: VoxelGrid) -> VoxelGrid:
    """Rescale to [0, 1] via (v - min) / (max - min); constant volumes map to 0."""
    lo = float(grid.data.min())
    hi = float(grid.data.max())
    if hi == lo:
        return VoxelGrid(grid.dims, np.zeros(grid.dims, dtype=np.float32), grid.spacing)
    out = (grid.data - lo) / (hi - lo)
    return VoxelGrid(grid.dims, out.astype(np.float32), grid.spacing)


def _source_coords(n_src: int, n_dst: int) -> np.ndarray:
    """Continuous source coordinates for each target index (corner-aligned)."""
    if n_dst == 1:
        return np.array([(n_src - 1) / 2.0])
    return np.arange(n_dst) * ((n_src - 1) / (n_dst - 1))


def resize_volume(grid: VoxelGrid, target_dims: Triple,
                  mode: str = "trilinear") -> VoxelGrid:
    """Resample to target_dims with nearest (round half-up) or trilinear sampling."""
    target_dims = tuple(int(d) for d in target_dims)
    if any(d < 1 for d in target_dims):
        raise ValueError(f"target dims must be >= 1, got {target_dims}")
    if mode not in ("nearest", "trilinear"):
        raise ValueError(f"unknown mode {mode!r}")
    if target_dims == grid.dims:
        return VoxelGrid(grid.dims, grid.data.copy(), grid.spacing)

    coords = [_source_coords(grid.dims[a], target_dims[a]) for a in range(3)]
    if mode == "nearest":
        idx = [np.clip(np.floor(c + 0.5).astype(int), 0, grid.dims[a] - 1)
               for a, c in enumerate(coords)]
        out = grid.data[np.ix_(idx[0], idx[1], idx[2])]
        return VoxelGrid(target_dims, out, grid.spacing)

    lo = [np.clip(np.floor(c).astype(int), 0, grid.dims[a] - 1)
          for a, c in enumerate(coords)]
    hi = [np.minimum(l + 1, grid.dims[a] - 1) for a, l in enumerate(lo)]
    frac = [(c - l).astype(np.float64) for c, l in zip(coords, lo)]

    out = np.zeros(target_dims, dtype=np.float64)
    data = grid.data.astype(np.float64)
    for bx in (0, 1):
        wx = (frac[0] if bx else 1.0 - frac[0])[:, None, None]
        ix = hi[0] if bx else lo[0]
        for by in (0, 1):
            wy = (frac[1] if by else 1.0 - frac[1])[None, :, None]
            iy = hi[1] if by else lo[1]
            for bz in (0, 1):
                wz = (frac[2] if bz else 1.0 - frac[2])[None, None, :]
                iz = hi[2] if bz else lo[2]
                out += wx * wy * wz * data[np.ix_(ix, iy, iz)]
    return VoxelGrid(target_dims, out.astype(np.float32), grid.spacing)


def make_phantom(dims: Triple, center: Triple, radius: float, delta: float,
                 base: float = 0.2, noise: float = 0.0,
                 seed: int = 0) -> tuple[VoxelGrid, VoxelGrid]:
    """Synthetic volume with one spherical lesion plus its binary truth mask.

    The lesion is the set of integer voxels within Euclidean distance
    `radius` of `center`; those voxels get `base + delta` before noise.
    Deterministic for a fixed seed.
    """
    dims = tuple(int(d) for d in dims)
    center = tuple(float(c) for c in center)
    for a in range(3):
        if center[a] - radius < 0 or center[a] + radius > dims[a] - 1:
            raise InvalidPhantomSpec(
                f"lesion (center={center}, radius={radius}) exceeds dims {dims}"
            )
    xs = np.arange(dims[0])[:, None, None]
    ys = np.arange(dims[1])[None, :, None]
    zs = np.arange(dims[2])[None, None, :]
    dist2 = (xs - center[0]) ** 2 + (ys - center[1]) ** 2 + (zs - center[2]) ** 2
    mask = (dist2 <= radius * radius).astype(np.float32)

    rng = np.random.default_rng(seed)
    vol = np.full(dims, base, dtype=np.float32)
    if noise > 0:
        vol += rng.uniform(-noise, noise, size=dims).astype(np.float32)
    vol += delta * mask
    return VoxelGrid(dims, vol), VoxelGrid(dims, mask)
