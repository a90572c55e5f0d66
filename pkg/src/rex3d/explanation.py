"""Extract an approximately-minimal sufficient voxel subset from a map."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientMap, NoSignal
from .occlusion import OcclusionSpec, apply_voxel_mask
from .oracle import OracleVerdict, Target, classify_batch
from .responsibility import ResponsibilityMap
from .volume import VoxelGrid


@dataclass
class Explanation:
    mask: VoxelGrid  # binary, 1 = part of the explanation
    verdict: OracleVerdict  # reply with the complement occluded
    voxel_count: int
    fraction: float
    batches_used: int


def _ranked_indices(rm: ResponsibilityMap) -> np.ndarray:
    """All linear voxel indices (x-fastest), responsibility descending,
    ties broken by index ascending."""
    flat = rm.grid.ravel().astype(np.float64)
    return np.argsort(-flat, kind="stable")


def extract_explanation(rm: ResponsibilityMap, d: VoxelGrid, oracle,
                        spec: OcclusionSpec, target: Target | None = None,
                        batch_fraction: float = 0.01,
                        budget=None) -> Explanation:
    """Greedy quantile-batched growth with a single shrink pass.

    Voxels are revealed in ranked batches until the occluded-complement
    query reproduces the target label; trailing zero-responsibility voxels
    of the final batch are then dropped if the verdict survives.
    """
    if rm.grid.dims != d.dims:
        raise ValueError(f"map dims {rm.grid.dims} != input dims {d.dims}")
    flat_rm = rm.grid.ravel()
    if not flat_rm.any():
        raise NoSignal("responsibility map is identically zero")
    if target is None:
        target = Target(classify_batch(oracle, [d], budget)[0].label)

    n = int(np.prod(d.dims))
    batch_size = math.ceil(batch_fraction * n)
    order = _ranked_indices(rm)

    def query(keep_flat: np.ndarray) -> OracleVerdict:
        keep = keep_flat.reshape(d.dims, order="F")
        mutant = apply_voxel_mask(d, keep, spec)
        return classify_batch(oracle, [mutant], budget)[0]

    keep_flat = np.zeros(n, dtype=bool)
    verdict = None
    batches = 0
    for start in range(0, n, batch_size):
        batch = order[start:start + batch_size]
        keep_flat[batch] = True
        batches += 1
        verdict = query(keep_flat)
        if verdict.label == target.label:
            break
    else:
        raise InsufficientMap("all-voxels mask still fails the target label")

    # Shrink: the final batch may have run past the signal into zero-rm
    # voxels; drop those and keep the smaller mask if it still passes.
    final_batch = order[(batches - 1) * batch_size:
                        min(batches * batch_size, n)]
    zero_tail = final_batch[flat_rm[final_batch] == 0]
    if zero_tail.size:
        trial = keep_flat.copy()
        trial[zero_tail] = False
        if trial.any():
            shrunk = query(trial)
            if shrunk.label == target.label:
                keep_flat = trial
                verdict = shrunk

    count = int(keep_flat.sum())
    mask = VoxelGrid(d.dims, keep_flat.reshape(d.dims, order="F")
                     .astype(np.float32), d.spacing)
    return Explanation(mask, verdict, count, count / n, batches)


def explanation_overlap(e_mask: VoxelGrid, truth: VoxelGrid
                        ) -> tuple[float, float, float]:
    """(IoU, Dice, truth coverage) between two binary volumes."""
    if e_mask.dims != truth.dims:
        raise ValueError(f"dims mismatch {e_mask.dims} != {truth.dims}")
    a = e_mask.data > 0
    b = truth.data > 0
    inter = int(np.logical_and(a, b).sum())
    union = int(np.logical_or(a, b).sum())
    na, nb = int(a.sum()), int(b.sum())
    if union == 0:
        return 1.0, 1.0, 1.0
    iou = inter / union
    dice = 2 * inter / (na + nb)
    coverage = inter / nb if nb else 1.0
    return iou, dice, coverage
