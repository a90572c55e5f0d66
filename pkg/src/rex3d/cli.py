"""Command-line surface: explain, render, eval."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import errors
from .explanation import extract_explanation
from .harness import ExperimentPlan, run_experiment
from .nifti import DT_UINT8, load_volume, save_volume
from .occlusion import parse_occlusion
from .oracle import Target, parse_oracle, spawn_external_oracle
from .render import PLANES, plane_dim, render_slice, write_png
from .responsibility import SearchConfig, generate_resp_map, normalize_map

log = logging.getLogger("rex3d")

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_ORACLE = 3
EXIT_NO_SIGNAL = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _setup_logging() -> None:
    level = {"debug": logging.DEBUG, "info": logging.INFO,
             "warn": logging.WARNING}.get(os.environ.get("REX3D_LOG", "warn"))
    logging.basicConfig(level=level or logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _merge_config(args, keys: dict[str, str]) -> dict:
    """File config overridden by explicitly set flags."""
    merged = {}
    if getattr(args, "config", None):
        merged.update(json.loads(Path(args.config).read_text()))
    for flag, key in keys.items():
        value = getattr(args, flag, None)
        if value is not None:
            merged[key] = value
    return merged


def _build_parser() -> _Parser:
    parser = _Parser(prog="rex3d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explain", parents=[], help="build a responsibility "
                       "map and extract an explanation")
    p.add_argument("--input", required=True)
    p.add_argument("--oracle", help="in-process oracle spec, e.g. "
                   "sphere:16,16,16,5,0.5")
    p.add_argument("--model", help="external oracle, cmd:<command line>")
    p.add_argument("--occlusion", default="zero")
    p.add_argument("--iterations", type=int)
    p.add_argument("--max-depth", type=int, dest="max_depth")
    p.add_argument("--search-limit", type=int, dest="search_limit")
    p.add_argument("--min-voxels", type=int, dest="min_voxels")
    p.add_argument("--batch-fraction", type=float, dest="batch_fraction")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config")
    p.set_defaults(run=cmd_explain)

    p = sub.add_parser("render", help="render slice overlay PNGs")
    p.add_argument("--input", required=True)
    p.add_argument("--map")
    p.add_argument("--explanation")
    p.add_argument("--truth")
    p.add_argument("--plane", default="all",
                   choices=list(PLANES) + ["all"])
    p.add_argument("--slice", default="mid")
    p.add_argument("--alpha", type=float, default=0.6)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(run=cmd_render)

    p = sub.add_parser("eval", help="run an experiment plan to CSV")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true", default=None)
    p.add_argument("--config")
    p.set_defaults(run=cmd_eval)
    return parser


def cmd_explain(args) -> int:
    conf = _merge_config(args, {
        "occlusion": "occlusion", "oracle": "oracle", "model": "model",
        "iterations": "iterations", "max_depth": "d_max",
        "search_limit": "l_max", "min_voxels": "min_region_voxels",
        "batch_fraction": "batch_fraction", "seed": "seed",
    })
    try:
        volume = load_volume(args.input)
    except errors.Rex3dError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    cfg = SearchConfig(
        d_max=conf.get("d_max", 4),
        l_max=conf.get("l_max", 2000),
        iterations=conf.get("iterations", 20),
        min_region_voxels=conf.get("min_region_voxels", 8),
        seed=conf.get("seed", 42),
    )
    batch_fraction = conf.get("batch_fraction", 0.01)
    occlusion_text = conf.get("occlusion", "zero")

    oracle = None
    try:
        spec = parse_occlusion(occlusion_text)
        model = conf.get("model")
        if model:
            if not model.startswith("cmd:"):
                print("error: --model must be cmd:<command line>",
                      file=sys.stderr)
                return EXIT_USAGE
            oracle = spawn_external_oracle(model[len("cmd:"):], volume.dims)
        elif conf.get("oracle"):
            oracle = parse_oracle(conf["oracle"], volume.dims)
        else:
            print("error: one of --oracle or --model is required",
                  file=sys.stderr)
            return EXIT_USAGE

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.monotonic()
        rm, stats = generate_resp_map(oracle, volume, spec, cfg)
        normalized = normalize_map(rm)
        save_volume(normalized.grid, out / "respmap.nii")
        expl = extract_explanation(rm, volume, oracle, spec,
                                   Target(stats.target_label),
                                   batch_fraction)
        save_volume(expl.mask, out / "explanation.nii", datatype=DT_UINT8)
        manifest = {
            "config": cfg.to_json(),
            "seed": cfg.seed,
            "occlusion": occlusion_text,
            "run": stats.to_json(),
            "explanation": {
                "voxel_count": expl.voxel_count,
                "fraction": expl.fraction,
                "batches_used": expl.batches_used,
                "verdict": {"label": expl.verdict.label,
                            "confidence": expl.verdict.confidence},
            },
            "wall_ms": int((time.monotonic() - t0) * 1000),
        }
        (out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return 0
    except (errors.NoSignal, errors.InsufficientMap) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SIGNAL
    except (errors.OracleUnavailable, errors.ProtocolError,
            errors.OracleTimeout) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except errors.Rex3dError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        if oracle is not None:
            oracle.close()


def cmd_render(args) -> int:
    try:
        base = load_volume(args.input)
        resp = load_volume(args.map) if args.map else None
        expl = load_volume(args.explanation) if args.explanation else None
        truth = load_volume(args.truth) if args.truth else None
    except errors.Rex3dError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for grid in (resp, expl, truth):
        if grid is not None and grid.dims != base.dims:
            print(f"error: dims mismatch {grid.dims} != {base.dims}",
                  file=sys.stderr)
            return EXIT_IO

    planes = list(PLANES) if args.plane == "all" else [args.plane]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for plane in planes:
        n = plane_dim(base.dims, plane)
        index = n // 2 if args.slice == "mid" else int(args.slice)
        if not 0 <= index < n:
            print(f"error: slice {index} outside 0..{n - 1} for {plane}",
                  file=sys.stderr)
            return EXIT_IO
        image = render_slice(base, resp, plane, index, args.alpha, expl, truth)
        write_png(image, out / f"{plane}.png")
    return 0


def cmd_eval(args) -> int:
    try:
        plan = ExperimentPlan.load(args.plan)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: cannot read plan: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    run_experiment(plan, args.out, workers=args.workers,
                   resume=bool(args.resume))
    return 0


def main(argv=None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    return args.run(args)


if __name__ == "__main__":
    sys.exit(main())
