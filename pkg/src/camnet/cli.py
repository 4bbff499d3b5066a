"""Command-line interface.

Exit codes: 0 success, 1 bad input, 2 ``evaluate`` found an uncovered
target, 3 ``optimize`` could not reach full coverage.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

from . import __version__
from .fusion import fuse_scene
from .io import (
    SceneFileError,
    bounds_to_dict,
    dumps,
    load_scene,
    report_to_dict,
    save_scene,
    write_json,
)
from .objective import ObjectiveKind, ObjectiveSpec
from .optimizer import (
    DEFAULT_MAX_EVALS,
    DEFAULT_STARTS,
    Mode,
    OptResult,
    ReconfigProblem,
    solve,
)
from .oracle import GridSpec, grid_search, simulate_quantization_error
from .raster import parse_grid, parse_plane, quality_map, render_quality_panels, write_raster

EXIT_OK, EXIT_INPUT, EXIT_UNCOVERED, EXIT_INFEASIBLE = 0, 1, 2, 3


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INPUT


def _problem(args) -> ReconfigProblem:
    scene = load_scene(args.scene)
    return ReconfigProblem(
        scene=scene,
        mode=Mode(args.mode),
        objective=ObjectiveSpec(ObjectiveKind(args.objective)),
        starts=getattr(args, "starts", 1),
        seed=getattr(args, "seed", 0),
        max_evals=getattr(args, "max_evals", DEFAULT_MAX_EVALS),
    )


def _result_doc(problem: ReconfigProblem, result: OptResult) -> dict:
    lo, hi = problem.bounds
    defaults = [c.bounds.position_min is None for c in problem.scene.cameras]
    return {
        "mode": problem.mode.value,
        "objective": problem.objective.kind.value,
        "coverage_penalty": problem.objective.coverage_penalty,
        "starts": problem.starts,
        "seed": problem.seed,
        "max_evals": problem.max_evals,
        "bounds": bounds_to_dict(problem.scene, problem.mode, lo, hi, defaults),
        "best_config": result.best_config,
        "best_value": result.best_value,
        "feasible": result.feasible,
        "evals_used": result.evals_used,
        "best_start": result.best_start,
        "per_start_values": result.per_start_values,
        "report": report_to_dict(result.report),
    }


def cmd_evaluate(args) -> int:
    scene = load_scene(args.scene)
    doc = report_to_dict(fuse_scene(scene))
    sys.stdout.write(dumps(doc))
    return EXIT_OK if doc["feasible"] else EXIT_UNCOVERED


def cmd_optimize(args) -> int:
    problem = _problem(args)
    result = solve(problem)
    out = args.out
    result_path = args.result or os.path.splitext(out)[0] + ".result.json"
    save_scene(out, result.scene)
    write_json(result_path, _result_doc(problem, result))
    print(f"best_value {result.best_value!r} feasible {str(result.feasible).lower()}")
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_map(args) -> int:
    scene = load_scene(args.scene)
    width, height = parse_grid(args.grid)
    plane = parse_plane(args.plane)
    raster = quality_map(scene, width, height, plane)
    write_raster(args.out, raster)
    if args.figure:
        render_quality_panels(scene, width, height, plane, args.figure)
    return EXIT_OK


def cmd_oracle(args) -> int:
    problem = _problem(args)
    result = grid_search(problem, GridSpec(args.grid_points, args.cap))
    doc = _result_doc(problem, result)
    doc["grid_points"] = args.grid_points
    doc["grid_size"] = result.grid_size
    doc["lipschitz_slack"] = result.lipschitz_slack
    text = dumps(doc)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate_error(args) -> int:
    scene = load_scene(args.scene)
    cams = {c.id: c for c in scene.cameras}
    tgts = {t.id: t for t in scene.targets}
    if args.camera not in cams:
        return _fail(f"unknown camera id {args.camera!r}")
    if args.target not in tgts:
        return _fail(f"unknown target id {args.target!r}")
    stats = simulate_quantization_error(cams[args.camera], tgts[args.target], args.length,
                                        args.trials, args.seed)
    doc = {"camera": args.camera, "target": args.target, "segment_length": args.length,
           "seed": args.seed, **stats.__dict__}
    sys.stdout.write(dumps(doc))
    return EXIT_OK


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=[m.value for m in Mode], default="ptz")
    p.add_argument("--objective", choices=[k.value for k in ObjectiveKind], default="mean")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camnet", description="Sensing-quality evaluation and reconfiguration of camera networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="per-pair and fused quality of a scene as JSON")
    p.add_argument("scene")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="multi-start reconfiguration")
    p.add_argument("scene")
    _add_problem_flags(p)
    p.add_argument("--starts", type=int, default=DEFAULT_STARTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-evals", type=int, default=DEFAULT_MAX_EVALS)
    p.add_argument("--out", required=True, help="optimized scene file")
    p.add_argument("--result", help="result JSON (default: <out>.result.json)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("map", help="quality raster over a workspace plane")
    p.add_argument("scene")
    p.add_argument("--grid", default="100x60", help="WxH cells")
    p.add_argument("--plane", default="z=0", help="axis-aligned plane, e.g. z=0")
    p.add_argument("--out", required=True, help="raster file, .csv or .pgm")
    p.add_argument("--figure", help="also render a PNG with perspective/distortion/complete panels")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("oracle", help="brute-force grid search")
    p.add_argument("scene")
    _add_problem_flags(p)
    p.add_argument("--grid-points", type=int, required=True)
    p.add_argument("--cap", type=int, default=GridSpec.__dataclass_fields__["cap"].default)
    p.add_argument("--out", help="result JSON (default: stdout)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate-error", help="pixel quantisation error trials for one pair")
    p.add_argument("scene")
    p.add_argument("--camera", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--length", type=float, default=100.0, help="segment length in mm")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate_error)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SceneFileError as exc:
        return _fail(str(exc))
    except (OSError, ValueError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
