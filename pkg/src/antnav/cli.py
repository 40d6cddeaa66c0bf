"""Command-line front end: run suites, generate and inspect scenes, and score
episode difficulty."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import (
    VARIANT_ALIASES,
    SuiteConfig,
    difficulty,
    run_suite,
    write_outputs,
)
from .scene import SCENE_KINDS, generate_scene, load_scene, save_scene


def _add_run(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("run", help="run a benchmark suite and write results")
    p.add_argument("--suite", required=True, help="suite JSON file")
    p.add_argument("--variant", action="append", choices=sorted(VARIANT_ALIASES),
                   help="agent variant (repeatable; default: suite file setting)")
    p.add_argument("--regime", choices=("discrete", "continuous"))
    p.add_argument("--consolidation", choices=("selective", "excessive", "checkpoint"))
    p.add_argument("--sigma", type=float, help="steering noise scale")
    p.add_argument("--bias", type=float, help="steering bias in (-1, 1)")
    p.add_argument("--seed", type=int, help="suite seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="episode-level parallelism")
    p.add_argument("--trace", action="store_true", help="write per-trial trace files")


def _add_scene(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("scene", help="generate or display scenes")
    mode = p.add_subparsers(dest="scene_cmd", required=True)
    gen = mode.add_parser("gen", help="generate a scene file")
    gen.add_argument("--kind", required=True, choices=SCENE_KINDS)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--size", type=int, default=32)
    gen.add_argument("--out", required=True)
    show = mode.add_parser("show", help="print a scene as ASCII art")
    show.add_argument("file")


def _add_difficulty(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("difficulty", help="score every episode in a suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--regime", choices=("discrete", "continuous"), default="discrete")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="antnav")
    sub = parser.add_subparsers(dest="cmd", required=True)
    _add_run(sub)
    _add_scene(sub)
    _add_difficulty(sub)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    overrides = {}
    if args.variant:
        overrides["variants"] = tuple(VARIANT_ALIASES[v] for v in args.variant)
    for key in ("regime", "consolidation", "sigma", "bias", "seed"):
        val = getattr(args, key)
        if val is not None:
            overrides[key] = val
    cfg = SuiteConfig.from_json(args.suite, **overrides)
    result = run_suite(cfg, jobs=args.jobs, collect_trace=args.trace)
    write_outputs(result, args.out)
    for variant in cfg.variants:
        agg = result.aggregate(variant)
        print(
            f"{variant}: first SR {agg['first_sr']:.3f} SPL {agg['first_spl']:.3f} | "
            f"learnt SR {agg['learnt_sr']:.3f} SPL {agg['learnt_spl']:.3f} | "
            f"collisions {agg['collisions_total']}"
        )
    print(f"wrote {Path(args.out) / 'summary.csv'}")
    return 0


def _cmd_scene(args: argparse.Namespace) -> int:
    if args.scene_cmd == "gen":
        scene = generate_scene(args.kind, args.seed, args.size)
        save_scene(scene, args.out)
        print(f"wrote {args.out} ({scene.n_rows}x{scene.n_cols} cells)")
        return 0
    scene = load_scene(args.file)
    for row in scene.grid:
        print("".join("#" if v else "." for v in row))
    print(f"# {scene.name}: cell_size={scene.cell_size} texture_seed={scene.texture_seed}")
    return 0


def _cmd_difficulty(args: argparse.Namespace) -> int:
    cfg = SuiteConfig.from_json(args.suite)
    records = []
    for i, ep in enumerate(cfg.episodes):
        spec = ep.build()
        rec = {"episode": i, "name": spec.name, **difficulty(spec, args.regime)}
        records.append(rec)
        print(
            f"episode {i} ({spec.name}): ratio {rec['complexity_ratio']:.3f} "
            f"odometry-only SPL {rec['odometry_only_spl']:.3f}"
        )
    print(json.dumps(records, indent=2))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "run":
        return _cmd_run(args)
    if args.cmd == "scene":
        return _cmd_scene(args)
    if args.cmd == "difficulty":
        return _cmd_difficulty(args)
    return 1


if __name__ == "__main__":
    sys.exit(main())
