#!/usr/bin/env python3
"""Calibration run behind the localization gate (coverage >= 0.5, IoU > 0).

Sphere lesion of radius 5 at the center of a 32^3 phantom, background noise
0.05, zero occlusion, default search configuration, seeds 0..19.
"""
from rex3d.explanation import explanation_overlap, extract_explanation
from rex3d.occlusion import OcclusionSpec
from rex3d.oracle import Target, sphere_oracle
from rex3d.responsibility import SearchConfig, generate_resp_map
from rex3d.volume import make_phantom


def main():
    dims = (32, 32, 32)
    spec = OcclusionSpec("zero")
    hits = 0
    print("seed  coverage   iou    dice   calls  voxels")
    for seed in range(20):
        volume, truth = make_phantom(dims, (16, 16, 16), 5, 0.6, base=0.2,
                                     noise=0.05, seed=seed)
        oracle = sphere_oracle((16, 16, 16), 5, 0.5, dims)
        rm, stats = generate_resp_map(oracle, volume, spec,
                                      SearchConfig(seed=seed))
        expl = extract_explanation(rm, volume, oracle, spec,
                                   Target(stats.target_label))
        iou, dice, coverage = explanation_overlap(expl.mask, truth)
        hit = coverage >= 0.5 and iou > 0
        hits += hit
        print(f"{seed:4d}  {coverage:7.3f}  {iou:5.3f}  {dice:5.3f}  "
              f"{stats.model_calls:5d}  {expl.voxel_count:6d}"
              + ("" if hit else "  MISS"))
    print(f"\n{hits}/20 seeds meet the gate (need >= 16)")


if __name__ == "__main__":
    main()
