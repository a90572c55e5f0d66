"""Axis-aligned voxel regions and the randomized two-axis quadrant split."""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import UnsplittableRegion


class Axis(IntEnum):
    ROW = 0
    COL = 1
    DEPTH = 2


_AXIS_KEYS = ("row", "col", "depth")


@dataclass(frozen=True)
class Region:
    """Half-open index box [start, end) per axis."""

    row: tuple[int, int]
    col: tuple[int, int]
    depth: tuple[int, int]

    def __post_init__(self):
        for key in _AXIS_KEYS:
            s, e = getattr(self, key)
            if s >= e:
                raise ValueError(f"empty {key} range [{s}, {e})")

    @classmethod
    def full(cls, dims) -> "Region":
        return cls((0, dims[0]), (0, dims[1]), (0, dims[2]))

    def range(self, axis: Axis) -> tuple[int, int]:
        return getattr(self, _AXIS_KEYS[axis])

    def extent(self, axis: Axis) -> int:
        s, e = self.range(axis)
        return e - s

    def replace(self, axis: Axis, rng: tuple[int, int]) -> "Region":
        parts = {key: getattr(self, key) for key in _AXIS_KEYS}
        parts[_AXIS_KEYS[axis]] = rng
        return Region(**parts)

    def slices(self) -> tuple[slice, slice, slice]:
        return tuple(slice(s, e) for s, e in (self.row, self.col, self.depth))

    def to_json(self) -> dict:
        return {key: {"start": getattr(self, key)[0], "end": getattr(self, key)[1]}
                for key in _AXIS_KEYS}

    @classmethod
    def from_json(cls, obj: dict) -> "Region":
        return cls(**{key: (obj[key]["start"], obj[key]["end"]) for key in _AXIS_KEYS})


@dataclass
class PartitionNode:
    """Queue entry: a region at some refinement level plus its revealed context."""

    region: Region
    depth: int
    parent_responsibility: float = 0.0
    context: tuple[Region, ...] = ()


def region_voxel_count(r: Region) -> int:
    return r.extent(Axis.ROW) * r.extent(Axis.COL) * r.extent(Axis.DEPTH)


def region_intersects(a: Region, b: Region) -> bool:
    for axis in Axis:
        (s1, e1), (s2, e2) = a.range(axis), b.range(axis)
        if e1 <= s2 or e2 <= s1:
            return False
    return True


def splittable_axes(head: Region) -> list[Axis]:
    return [axis for axis in Axis if head.extent(axis) >= 2]


def generate_masks(head: Region, rng: np.random.Generator) -> list[Region]:
    """Split a region into 4 disjoint covering quadrants.

    Two distinct axes are drawn uniformly among those with extent >= 2,
    then one interior coordinate per axis, uniform over (start, end).
    """
    axes = splittable_axes(head)
    if len(axes) < 2:
        raise UnsplittableRegion(f"{head} splittable on {len(axes)} axes")
    picked = rng.choice(len(axes), size=2, replace=False)
    axis1, axis2 = axes[picked[0]], axes[picked[1]]

    coords = []
    for axis in (axis1, axis2):
        s, e = head.range(axis)
        coords.append(int(rng.integers(s + 1, e)))
    coord1, coord2 = coords

    quads = []
    for lo1, hi1 in _split(head.range(axis1), coord1):
        first = head.replace(axis1, (lo1, hi1))
        for lo2, hi2 in _split(first.range(axis2), coord2):
            quads.append(first.replace(axis2, (lo2, hi2)))
    return quads


def _split(rng: tuple[int, int], coord: int) -> list[tuple[int, int]]:
    s, e = rng
    return [(s, coord), (coord, e)]
