"""Occlusion strategies: build mutants by masking everything outside a kept set."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DonorShapeMismatch, EmptyCohort
from .partition import Region
from .volume import VoxelGrid


@dataclass(frozen=True)
class OcclusionSpec:
    """Replacement content for occluded voxels.

    strategy is "zero", "constant" (with value), or "donor" (with a reference
    volume substituted coordinate-for-coordinate).
    """

    strategy: str
    value: float = 0.0
    donor: VoxelGrid | None = None

    def __post_init__(self):
        if self.strategy not in ("zero", "constant", "donor"):
            raise ValueError(f"unknown occlusion strategy {self.strategy!r}")
        if self.strategy == "donor" and self.donor is None:
            raise ValueError("donor strategy requires a donor volume")

    def label(self) -> str:
        if self.strategy == "constant":
            return f"value:{self.value}"
        return self.strategy


ZERO = OcclusionSpec("zero")


def background(d: VoxelGrid, spec: OcclusionSpec) -> np.ndarray:
    """Fully-occluded volume data for `d` under `spec`."""
    if spec.strategy == "zero":
        return np.zeros(d.dims, dtype=np.float32)
    if spec.strategy == "constant":
        return np.full(d.dims, spec.value, dtype=np.float32)
    if spec.donor.dims != d.dims:
        raise DonorShapeMismatch(
            f"donor dims {spec.donor.dims} != subject dims {d.dims}"
        )
    return spec.donor.data.copy()


def apply_mask(d: VoxelGrid, kept: list[Region], spec: OcclusionSpec) -> VoxelGrid:
    """Reveal voxels inside any kept region; fill the rest per the strategy."""
    out = background(d, spec)
    for region in kept:
        sl = region.slices()
        out[sl] = d.data[sl]
    return VoxelGrid(d.dims, out, d.spacing)


def apply_voxel_mask(d: VoxelGrid, keep: np.ndarray, spec: OcclusionSpec) -> VoxelGrid:
    """Same semantics as apply_mask but with an arbitrary boolean keep mask."""
    out = background(d, spec)
    keep = keep.astype(bool)
    out[keep] = d.data[keep]
    return VoxelGrid(d.dims, out, d.spacing)


def mean_intensity_value(cohort: list[VoxelGrid]) -> float:
    """Arithmetic mean over all voxels of all cohort volumes."""
    if not cohort:
        raise EmptyCohort("cohort is empty")
    dims = cohort[0].dims
    for g in cohort:
        if g.dims != dims:
            raise ValueError(f"cohort dims mismatch: {g.dims} != {dims}")
    total = sum(float(g.data.sum(dtype=np.float64)) for g in cohort)
    return total / (len(cohort) * int(np.prod(dims)))


def parse_occlusion(text: str, loader=None) -> OcclusionSpec:
    """Parse CLI syntax: "zero", "value:<f>", "mean:<list-file>", "donor:<path>"."""
    from .nifti import load_volume

    loader = loader or load_volume
    if text == "zero":
        return OcclusionSpec("zero")
    if text.startswith("value:"):
        return OcclusionSpec("constant", value=float(text[len("value:"):]))
    if text.startswith("mean:"):
        list_file = Path(text[len("mean:"):])
        paths = [line.strip() for line in list_file.read_text().splitlines()
                 if line.strip()]
        cohort = [loader(p) for p in paths]
        return OcclusionSpec("constant", value=mean_intensity_value(cohort))
    if text.startswith("donor:"):
        return OcclusionSpec("donor", donor=loader(text[len("donor:"):]))
    raise ValueError(f"unrecognized occlusion spec {text!r}")
