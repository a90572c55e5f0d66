"""Iterative partition refinement with causal-responsibility attribution.

One refinement level splits a queue node into 4 quadrants, evaluates the
14 proper non-empty quadrant subsets as occlusion mutants, finds the
minimal passing subsets, and credits each part 1/|S| for the smallest
minimal passing subset S containing it. Passing parts are refined further;
random restarts accumulate into a single per-voxel map.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExhausted, UnsplittableRegion
from .occlusion import OcclusionSpec, apply_mask
from .oracle import QueryBudget, Target, classify_batch
from .partition import (
    PartitionNode,
    Region,
    generate_masks,
    region_voxel_count,
)
from .volume import VoxelGrid

N_PARTS = 4
FULL_MASK = (1 << N_PARTS) - 1
PROPER_SUBSETS = tuple(m for m in range(1, FULL_MASK))  # 14 masks


@dataclass
class SearchConfig:
    d_max: int = 4
    l_max: int = 2000
    iterations: int = 20
    min_region_voxels: int = 8
    seed: int = 42

    def __post_init__(self):
        if self.d_max < 1:
            raise ValueError("d_max must be >= 1")
        if self.l_max < 14:
            raise ValueError("l_max must be >= 14")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.min_region_voxels < 1:
            raise ValueError("min_region_voxels must be >= 1")

    def to_json(self) -> dict:
        return {
            "d_max": self.d_max,
            "l_max": self.l_max,
            "iterations": self.iterations,
            "min_region_voxels": self.min_region_voxels,
            "seed": self.seed,
        }


@dataclass
class ResponsibilityMap:
    grid: VoxelGrid
    iterations_completed: int = 0
    normalized: bool = False

    @classmethod
    def zeros(cls, dims) -> "ResponsibilityMap":
        return cls(VoxelGrid.full(dims, 0.0))


@dataclass
class IncrementEvent:
    """One attribution event, for locality auditing."""

    restart: int
    depth: int
    region: Region
    increment: float


@dataclass
class RunStats:
    target_label: int = 0
    calls_per_restart: list[int] = field(default_factory=list)
    model_calls: int = 0
    passing_mutants: int = 0
    truncated: bool = False
    increments: list[IncrementEvent] | None = None

    def to_json(self) -> dict:
        return {
            "target_label": self.target_label,
            "calls_per_restart": list(self.calls_per_restart),
            "model_calls": self.model_calls,
            "passing_mutants": self.passing_mutants,
            "truncated": self.truncated,
        }


def normalize_map(rm: ResponsibilityMap) -> ResponsibilityMap:
    """Divide by the global max; an identically-zero map stays zero."""
    peak = float(rm.grid.data.max())
    data = rm.grid.data / peak if peak > 0 else rm.grid.data.copy()
    return ResponsibilityMap(
        VoxelGrid(rm.grid.dims, data, rm.grid.spacing),
        rm.iterations_completed,
        normalized=True,
    )


def update_depth(current_depth: int, queue) -> int:
    """Refinement level of the next node to be processed (loop-guard input)."""
    return queue[0].depth if queue else current_depth


def _minimal_passing(passing: dict[int, bool]) -> list[int]:
    """Masks whose every proper non-empty submask fails; empty set fails by
    convention, the full set passes by parent consistency."""
    minimal = []
    for mask, ok in passing.items():
        if not ok:
            continue
        sub_passes = any(
            passing.get(sub, False)
            for sub in range(1, mask)
            if sub & mask == sub
        )
        if not sub_passes:
            minimal.append(mask)
    if not minimal:
        minimal.append(FULL_MASK)
    return minimal


def explore_level(parts: list[Region], d: VoxelGrid, context: tuple[Region, ...],
                  oracle, spec: OcclusionSpec, budget: QueryBudget,
                  target: Target, attribution: str = "minimal"):
    """Evaluate all 14 proper non-empty subsets of 4 sibling parts.

    Returns (per-part increments, per-part witness contexts, passing-mutant
    count). attribution="all-passing" is a deliberately broken variant kept
    as a negative control for the locality audit.
    """
    budget.check()
    mutants = [
        apply_mask(d, list(context) + [parts[i] for i in range(N_PARTS)
                                      if mask >> i & 1], spec)
        for mask in PROPER_SUBSETS
    ]
    verdicts = classify_batch(oracle, mutants, budget)
    passing = {mask: v.label == target.label
               for mask, v in zip(PROPER_SUBSETS, verdicts)}
    n_passing = sum(passing.values())

    if attribution == "all-passing":
        increments = [0.0] * N_PARTS
        witness: list[int | None] = [None] * N_PARTS
        for mask, ok in passing.items():
            if not ok:
                continue
            for i in range(N_PARTS):
                if mask >> i & 1:
                    increments[i] = 1.0
                    witness[i] = mask if witness[i] is None else witness[i]
        if not any(increments):
            for i in range(N_PARTS):
                increments[i] = 1.0 / N_PARTS
                witness[i] = FULL_MASK
    else:
        minimal = _minimal_passing(passing)
        increments = [0.0] * N_PARTS
        witness = [None] * N_PARTS
        for i in range(N_PARTS):
            containing = [m for m in minimal if m >> i & 1]
            if not containing:
                continue
            best = min(containing, key=lambda m: (bin(m).count("1"), m))
            increments[i] = 1.0 / bin(best).count("1")
            witness[i] = best

    contexts = []
    for i in range(N_PARTS):
        if witness[i] is None:
            contexts.append(None)
        else:
            siblings = tuple(parts[j] for j in range(N_PARTS)
                             if j != i and witness[i] >> j & 1)
            contexts.append(tuple(context) + siblings)
    return increments, contexts, n_passing


def restart_seeds(seed: int, iterations: int) -> list[np.random.SeedSequence]:
    """Independent per-restart seed sequences, reproducible from one root seed."""
    return np.random.SeedSequence(seed).spawn(iterations)


def generate_resp_map(oracle, d: VoxelGrid, spec: OcclusionSpec,
                      cfg: SearchConfig, attribution: str = "minimal",
                      log_increments: bool = False
                      ) -> tuple[ResponsibilityMap, RunStats]:
    """Run the full engine: restarts of breadth-first quadrant refinement."""
    budget = QueryBudget(cfg.l_max)
    stats = RunStats(increments=[] if log_increments else None)

    target_verdict = classify_batch(oracle, [d], budget)[0]
    target = Target(target_verdict.label)
    stats.target_label = target.label

    rm = np.zeros(d.dims, dtype=np.float64)
    full = Region.full(d.dims)
    completed = 0

    for restart, seq in enumerate(restart_seeds(cfg.seed, cfg.iterations)):
        if budget.exhausted:
            stats.truncated = True
            break
        rng = np.random.default_rng(seq)
        calls_before = budget.used
        queue: deque[PartitionNode] = deque([PartitionNode(full, 0)])
        while queue:
            if update_depth(0, queue) >= cfg.d_max:
                break
            node = queue.popleft()
            if region_voxel_count(node.region) < cfg.min_region_voxels:
                continue
            try:
                parts = generate_masks(node.region, rng)
            except UnsplittableRegion:
                continue
            try:
                increments, contexts, n_pass = explore_level(
                    parts, d, node.context, oracle, spec, budget, target,
                    attribution)
            except BudgetExhausted:
                stats.truncated = True
                break
            stats.passing_mutants += n_pass
            for part, inc, ctx in zip(parts, increments, contexts):
                if stats.increments is not None:
                    stats.increments.append(
                        IncrementEvent(restart, node.depth, part, inc))
                if inc > 0:
                    rm[part.slices()] += inc
                    queue.append(PartitionNode(part, node.depth + 1,
                                               inc, ctx))
        stats.calls_per_restart.append(budget.used - calls_before)
        if stats.truncated:
            break
        completed += 1

    stats.model_calls = budget.used
    result = ResponsibilityMap(
        VoxelGrid(d.dims, rm.astype(np.float32), d.spacing),
        iterations_completed=completed,
    )
    return result, stats
