"""Slice overlay rendering: grayscale base, diverging-colormap map overlay,
1-voxel contours for explanation (orange) and truth (purple) masks."""
from __future__ import annotations

import numpy as np
from PIL import Image

from .volume import VoxelGrid

PLANES = ("axial", "sagittal", "coronal")
EXPLANATION_RGB = (255, 165, 0)
TRUTH_RGB = (128, 0, 128)


def _colormap_lut() -> np.ndarray:
    """256-entry blue -> white -> red diverging ramp."""
    lut = np.zeros((256, 3), dtype=np.float64)
    for i in range(256):
        t = i / 255.0
        if t <= 0.5:
            u = t * 2.0
            lut[i] = (255 * u, 255 * u, 255.0)
        else:
            u = (t - 0.5) * 2.0
            lut[i] = (255.0, 255 * (1 - u), 255 * (1 - u))
    return lut


_LUT = _colormap_lut()


def slice_2d(grid: VoxelGrid, plane: str, index: int) -> np.ndarray:
    """Extract one plane as a 2D array (rows, cols)."""
    if plane == "axial":  # fix z -> (y, x)
        return grid.data[:, :, index].T
    if plane == "sagittal":  # fix x -> (z, y)
        return grid.data[index, :, :].T
    if plane == "coronal":  # fix y -> (z, x)
        return grid.data[:, index, :].T
    raise ValueError(f"unknown plane {plane!r}")


def plane_dim(dims, plane: str) -> int:
    return {"axial": dims[2], "sagittal": dims[0], "coronal": dims[1]}[plane]


def contour(mask2d: np.ndarray) -> np.ndarray:
    """Mask pixels 4-adjacent (in-plane) to a non-mask pixel or the border."""
    m = mask2d.astype(bool)
    padded = np.pad(m, 1, constant_values=False)
    interior = (padded[:-2, 1:-1] & padded[2:, 1:-1]
                & padded[1:-1, :-2] & padded[1:-1, 2:])
    return m & ~interior


def render_slice(base: VoxelGrid, resp: VoxelGrid | None, plane: str,
                 index: int, alpha: float = 0.6,
                 explanation: VoxelGrid | None = None,
                 truth: VoxelGrid | None = None) -> np.ndarray:
    """Compose one slice into an (H, W, 3) uint8 image."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0, 1]")
    b = slice_2d(base, plane, index).astype(np.float64)
    lo, hi = b.min(), b.max()
    gray = (b - lo) / (hi - lo) if hi > lo else np.zeros_like(b)
    rgb = np.repeat((gray * 255.0)[:, :, None], 3, axis=2)

    if resp is not None:
        r = np.clip(slice_2d(resp, plane, index).astype(np.float64), 0.0, 1.0)
        colors = _LUT[np.round(r * 255).astype(int)]
        w = (alpha * r)[:, :, None]
        rgb = (1.0 - w) * rgb + w * colors

    for mask, color in ((explanation, EXPLANATION_RGB), (truth, TRUTH_RGB)):
        if mask is None:
            continue
        edge = contour(slice_2d(mask, plane, index) > 0)
        rgb[edge] = color

    return np.clip(np.round(rgb), 0, 255).astype(np.uint8)


def write_png(image: np.ndarray, path) -> None:
    Image.fromarray(image, mode="RGB").save(path, format="PNG")
