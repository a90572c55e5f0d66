from datetime import timedelta

import numpy as np
import pytest
from hypothesis import settings

from rex3d.oracle import OracleVerdict
from rex3d.volume import VoxelGrid

settings.register_profile(
    "default", max_examples=50, deadline=timedelta(seconds=10))
settings.load_profile("default")


class RegionDependentOracle:
    """Pure oracle: label 1 iff every listed region is fully revealed
    (min over the region above the threshold). reads = bounding region."""

    def __init__(self, regions, mode="all", threshold=0.5, reads=None):
        self.regions = regions
        self.mode = mode
        self.threshold = threshold
        self.reads = reads if reads is not None else _bbox(regions)
        self.name = f"region-dependent({mode})"

    def _holds(self, data, region):
        return float(data[region.slices()].min()) > self.threshold

    def classify_batch(self, volumes):
        out = []
        for v in volumes:
            hits = [self._holds(v, r) for r in self.regions]
            ok = all(hits) if self.mode == "all" else any(hits)
            out.append(OracleVerdict(int(ok), 1.0 if ok else 0.0))
        return out


class ConstantOracle:
    """Always answers the same label."""

    def __init__(self, label=1):
        self.label = label
        self.reads = None
        self.name = f"constant({label})"

    def classify_batch(self, volumes):
        return [OracleVerdict(self.label, 1.0) for _ in volumes]


def _bbox(regions):
    from rex3d.partition import Region
    return Region(
        (min(r.row[0] for r in regions), max(r.row[1] for r in regions)),
        (min(r.col[0] for r in regions), max(r.col[1] for r in regions)),
        (min(r.depth[0] for r in regions), max(r.depth[1] for r in regions)),
    )


@pytest.fixture
def ones8():
    return VoxelGrid.full((8, 8, 8), 1.0)


def seeded_grid(dims, seed):
    rng = np.random.default_rng(seed)
    return VoxelGrid(dims, rng.random(dims, dtype=np.float32))
