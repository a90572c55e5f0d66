"""Acceptance gate: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them)."""
import math
import time

import numpy as np
import pytest

from rex3d.cli import main
from rex3d.explanation import (
    _ranked_indices,
    explanation_overlap,
    extract_explanation,
)
from rex3d.harness import PhantomSpec, locality_audit, resolve_occlusion
from rex3d.nifti import load_volume, save_volume
from rex3d.occlusion import OcclusionSpec, apply_voxel_mask
from rex3d.oracle import Target, classify_batch, sphere_oracle
from rex3d.partition import Region, generate_masks
from rex3d.render import render_slice, write_png
from rex3d.responsibility import SearchConfig, generate_resp_map
from rex3d.volume import VoxelGrid, make_phantom

from bruteforce import brute_force_map_dmax1
from conftest import RegionDependentOracle, seeded_grid

ZERO = OcclusionSpec("zero")

PARTS_8 = [
    Region((0, 4), (0, 4), (0, 8)),
    Region((0, 4), (4, 8), (0, 8)),
    Region((4, 8), (0, 4), (0, 8)),
    Region((4, 8), (4, 8), (0, 8)),
]

MATRIX_PHANTOM = PhantomSpec(id="m0", dims=(32, 32, 32), center=(16, 16, 16),
                             radius=5, delta=0.6, base=0.2, noise=0.05,
                             seed=1)
MATRIX_OCCLUSIONS = ("zero", "mean", "donor")
MATRIX_SEEDS = (0, 1, 2, 3, 4)


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {name}: {status}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name} failed: {detail}"


@pytest.fixture(scope="module")
def matrix_results():
    """One engine + extraction run per matrix cell, shared across criteria."""
    volume, truth = MATRIX_PHANTOM.build()
    oracle = sphere_oracle(MATRIX_PHANTOM.center, MATRIX_PHANTOM.radius, 0.5,
                           MATRIX_PHANTOM.dims)
    cells = []
    for occlusion in MATRIX_OCCLUSIONS:
        spec = resolve_occlusion(occlusion, MATRIX_PHANTOM, volume)
        for seed in MATRIX_SEEDS:
            cfg = SearchConfig(seed=seed)
            rm, stats = generate_resp_map(oracle, volume, spec, cfg)
            expl = extract_explanation(rm, volume, oracle, spec,
                                       Target(stats.target_label))
            cells.append((occlusion, seed, cfg, rm, stats, expl))
    return volume, truth, oracle, cells


def test_brute_force_equivalence():
    ones8 = VoxelGrid.full((8, 8, 8), 1.0)
    fixtures = {
        "single-part": RegionDependentOracle([PARTS_8[1]]),
        "conjunction": RegionDependentOracle([PARTS_8[0], PARTS_8[2]], "all"),
        "disjunction": RegionDependentOracle([PARTS_8[0], PARTS_8[1]], "any"),
    }
    t0 = time.monotonic()
    ok = True
    for name, oracle in fixtures.items():
        cfg = SearchConfig(d_max=1, l_max=14, iterations=1,
                           min_region_voxels=1, seed=42)
        rm, _ = generate_resp_map(oracle, ones8, ZERO, cfg)
        expected = brute_force_map_dmax1(oracle, ones8, ZERO, 42)
        ok = ok and np.array_equal(rm.grid.data, expected)
    elapsed = time.monotonic() - t0
    report("brute-force-equivalence", ok and elapsed < 1.0,
           f"{elapsed:.3f}s, exact match on 3 fixtures")


def test_locality_audit_clean():
    dims = (32, 32, 32)
    t0 = time.monotonic()
    violations = 0
    for seed in range(20):
        phantom = PhantomSpec(id=f"loc{seed}", dims=dims, center=(16, 16, 16),
                              radius=5, delta=0.6, base=0.2, noise=0.05,
                              seed=seed)
        volume, _ = phantom.build()
        oracle = sphere_oracle((16, 16, 16), 5, 0.5, dims)
        for occlusion in MATRIX_OCCLUSIONS:
            spec = resolve_occlusion(occlusion, phantom, volume)
            _, stats = generate_resp_map(oracle, volume, spec,
                                         SearchConfig(seed=seed),
                                         log_increments=True)
            violations += locality_audit(stats.increments, oracle.reads, dims)
    elapsed = time.monotonic() - t0
    report("locality", violations == 0 and elapsed < 60.0,
           f"{violations} violations over 20 seeds x 3 occlusions, "
           f"{elapsed:.1f}s")


def test_sufficiency_all_cells(matrix_results):
    _, _, _, cells = matrix_results
    bad = [(occ, seed) for occ, seed, _, _, stats, expl in cells
           if expl.verdict.label != stats.target_label]
    report("sufficiency", not bad, f"{len(cells)} cells, failures: {bad}")


def test_approximate_minimality_all_cells(matrix_results):
    volume, _, oracle, cells = matrix_results
    n = int(np.prod(volume.dims))
    batch = math.ceil(0.01 * n)
    bad = []
    for occlusion, seed, cfg, rm, stats, expl in cells:
        if expl.batches_used == 1:
            continue  # final batch is the whole mask; empty fails by convention
        spec = resolve_occlusion(occlusion, MATRIX_PHANTOM, volume)
        order = _ranked_indices(rm)
        keep = np.zeros(n, dtype=bool)
        keep[order[:(expl.batches_used - 1) * batch]] = True
        mutant = apply_voxel_mask(volume, keep.reshape(volume.dims, order="F"),
                                 spec)
        if classify_batch(oracle, [mutant])[0].label == stats.target_label:
            bad.append((occlusion, seed))
    report("approximate-minimality", not bad,
           f"{len(cells)} cells, failures: {bad}")


def test_localization_quality():
    dims = (32, 32, 32)
    hits = 0
    for seed in range(20):
        volume, truth = make_phantom(dims, (16, 16, 16), 5, 0.6, base=0.2,
                                     noise=0.05, seed=seed)
        oracle = sphere_oracle((16, 16, 16), 5, 0.5, dims)
        rm, stats = generate_resp_map(oracle, volume, ZERO,
                                      SearchConfig(seed=seed))
        expl = extract_explanation(rm, volume, oracle, ZERO,
                                   Target(stats.target_label))
        iou, _, coverage = explanation_overlap(expl.mask, truth)
        if coverage >= 0.5 and iou > 0:
            hits += 1
    report("localization-quality", hits >= 16, f"{hits}/20 seeds hit")


def test_partition_properties_10000_draws():
    head = Region((0, 8), (0, 8), (0, 8))
    failures = 0
    counts = np.zeros((8, 8, 8), dtype=int)
    for seed in range(10_000):
        regions = generate_masks(head, np.random.default_rng(seed))
        counts[:] = 0
        for r in regions:
            counts[r.slices()] += 1
        split_axes = [axis for axis in range(3)
                      if len({r.range(axis) for r in regions}) > 1]
        interior = all(
            head.range(axis)[0] < bound < head.range(axis)[1]
            for axis in split_axes
            for bound in {r.range(axis)[1] for r in regions}
            - {head.range(axis)[1]}
        )
        if not (len(regions) == 4 and np.all(counts == 1)
                and len(split_axes) == 2 and interior):
            failures += 1
    report("partition-properties", failures == 0,
           f"{failures} failures in 10000 draws")


def test_determinism_bit_identical_artifacts(tmp_path):
    volume, _ = MATRIX_PHANTOM.build()
    src = tmp_path / "p.nii"
    save_volume(volume, src)
    args = ["explain", "--input", str(src),
            "--oracle", "sphere:16,16,16,5,0.5", "--occlusion", "zero",
            "--seed", "42", "--iterations", "5", "--search-limit", "600",
            "--max-depth", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    same_map = ((tmp_path / "a/respmap.nii").read_bytes()
                == (tmp_path / "b/respmap.nii").read_bytes())
    import json
    ma = json.loads((tmp_path / "a/manifest.json").read_text())
    mb = json.loads((tmp_path / "b/manifest.json").read_text())
    ma.pop("wall_ms"), mb.pop("wall_ms")
    report("determinism", same_map and ma == mb,
           "respmap bytes and manifests identical (wall_ms excluded)")


def test_budget_within_limit_all_cells(matrix_results):
    _, _, _, cells = matrix_results
    worst = max(stats.model_calls for _, _, _, _, stats, _ in cells)
    limit = SearchConfig().l_max + 14
    report("budget", worst <= limit, f"max {worst} calls <= {limit}")


def test_nifti_round_trip_100_volumes(tmp_path):
    rng = np.random.default_rng(99)
    bad = 0
    for i in range(100):
        dims = tuple(int(d) for d in rng.integers(1, 12, size=3))
        spacing = tuple(float(np.float32(s)) for s in rng.random(3) + 0.5)
        grid = VoxelGrid(dims, rng.random(dims, dtype=np.float32), spacing)
        path = tmp_path / (f"v{i}.nii.gz" if i % 2 else f"v{i}.nii")
        save_volume(grid, path)
        back = load_volume(path)
        if load_volume(path) != grid or back.spacing != grid.spacing:
            bad += 1
    report("nifti-round-trip", bad == 0, f"{bad} failures in 100 volumes")


def test_rendering_deterministic_and_grayscale(tmp_path):
    base = seeded_grid((16, 16, 16), seed=12)
    resp = seeded_grid((16, 16, 16), seed=13)
    write_png(render_slice(base, resp, "axial", 8), tmp_path / "a.png")
    write_png(render_slice(base, resp, "axial", 8), tmp_path / "b.png")
    identical = ((tmp_path / "a.png").read_bytes()
                 == (tmp_path / "b.png").read_bytes())
    zero = render_slice(base, VoxelGrid.full((16, 16, 16), 0.0), "axial", 8)
    plain = render_slice(base, None, "axial", 8)
    report("rendering", identical and np.array_equal(zero, plain),
           "byte-identical PNGs, zero map == grayscale base")
