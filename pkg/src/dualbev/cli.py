"""Command-line entry point.

Exit codes: 0 success, 1 I/O or input failure, 2 usage, 3 collision, 4 timeout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import simulator
from .config import SEED_ENV, ConfigError, load_config
from .global_map import fit_tiny_gbpm, rasterize_trajectories, synth_hint_map
from .integration import COLLISION, SUCCESS, TIMEOUT, run_cycle
from .local_planner import OraclePlanner, StubPlanner
from .pooling import bench_pooling
from .raster import ProbabilityMap, RasterFormatError, read_pgm, read_trajectories_csv, write_pgm, write_ppm
from .world import Pose2D, WorldModel

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_COLLISION, EXIT_TIMEOUT = 0, 1, 2, 3, 4
OUTCOME_EXIT = {SUCCESS: EXIT_OK, COLLISION: EXIT_COLLISION, TIMEOUT: EXIT_TIMEOUT}

log = logging.getLogger("dualbev")


class InputError(Exception):
    """Bad input data (not bad flags); maps to exit code 1."""


def _seed(value):
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    return int(env) if env else 0


def _floats(text, n_min, n_max, what):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} must be comma-separated numbers, got {text!r}") from None
    if not n_min <= len(vals) <= n_max:
        raise argparse.ArgumentTypeError(f"{what} needs {n_min}-{n_max} values, got {len(vals)}")
    return vals


def _xy(text):
    return _floats(text, 2, 2, "position")


def _pose(text):
    return _floats(text, 2, 3, "pose")


def _load_world(path) -> WorldModel:
    return WorldModel.from_raster(read_pgm(path))


def cmd_gen_world(args):
    world = simulator.gen_world(args.kind, _seed(args.seed), args.dims, args.cell_size)
    write_pgm(world.obstacle_raster(), args.out)
    log.info("wrote %s (%dx%d cells, %.1f%% impassable)", args.out, world.shape[1], world.shape[0], 100 * world.occupied.mean())
    return EXIT_OK


def cmd_make_map(args):
    world = _load_world(args.world)
    if args.mode == "synth":
        if not world.occupied.any():
            raise InputError("world has no obstacles; the synthesized hint map would be undefined")
        hint = synth_hint_map(world.obstacle_raster(), args.sigma)
    else:
        logs = read_trajectories_csv(args.trajectories)
        overhead = world.overhead(seed=_seed(args.seed))
        mask = rasterize_trajectories(logs, overhead, args.stroke_radius)
        history = []
        hint = fit_tiny_gbpm(mask, overhead, epochs=args.epochs, history=history)
        for epoch, loss in enumerate(history, 1):
            print(f"epoch {epoch} focal_loss {loss:.8f}", file=sys.stderr)
    write_pgm(hint, args.out)
    return EXIT_OK


def cmd_run(args):
    overrides = {"k": args.k, "seed": args.seed, "step_budget": args.step_budget}
    cfg = load_config(args.config, overrides)
    world = _load_world(args.world)
    if args.map:
        hint = read_pgm(args.map, cls=ProbabilityMap)
    else:
        hint = ProbabilityMap(np.zeros(world.shape), world.origin, world.cell_size)
    if args.start:
        start = Pose2D(*args.start)
    else:
        x0, y0, x1, y1 = world.bounds
        start = Pose2D((x0 + x1) / 2, (y0 + y1) / 2, 0.0)
    if not world.is_free(start.xy):
        raise InputError(f"start {start} is not in free space")
    if args.planner == "stub":
        planner = StubPlanner(cfg.planner())
    else:
        planner = OraclePlanner(cfg.planner())
    result = run_cycle(planner, hint, world, start, args.goal, cfg.nav())
    prefix = Path(args.out_prefix)
    prefix.with_suffix(".csv").write_text(result.trajectory_csv())
    prefix.with_suffix(".json").write_text(result.to_json() + "\n")
    if args.render:
        write_ppm(render(hint, result, world), prefix.with_suffix(".ppm"))
    print(result.to_json())
    return OUTCOME_EXIT[result.outcome]


def render(hint: ProbabilityMap, result, world: WorldModel | None = None) -> np.ndarray:
    """Map (dark = high cost) with the trajectory in red, start green, goal blue; same size as the map."""
    gray = np.round(255 * (1.0 - hint.cells)).astype(np.uint8)
    img = np.repeat(gray[:, :, None], 3, axis=2)

    def paint(xy, color):
        col, row = hint.pixel_coords(np.asarray(xy, dtype=float))
        r, c = int(np.floor(row)), int(np.floor(col))
        if 0 <= r < hint.height and 0 <= c < hint.width:
            img[r, c] = color

    pts = np.array([[p.x, p.y] for p in result.trajectory])
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(2, int(np.ceil(np.hypot(*(b - a)) / (0.5 * hint.meters_per_pixel))))
        for t in np.linspace(0, 1, n):
            paint(a + t * (b - a), (255, 0, 0))
    paint(result.start[:2], (0, 255, 0))
    paint(result.goal, (0, 0, 255))
    return img


def _predictor(name, seed):
    if name == "oracle":
        return simulator.oracle_predictor
    if name == "noisy":
        rng = np.random.default_rng(seed)
        return lambda w, s, g: simulator.oracle_predictor(w, s, g) + rng.uniform(-2.0, 2.0)
    return lambda w, s, g: 10.0


def cmd_eval(args):
    seed = _seed(args.seed)
    cfg = load_config(args.config, {"seed": seed})
    if args.suite == "temporal":
        world = simulator.gen_world(args.world_kind, seed, args.dims)
        reports = [simulator.eval_temporal_metrics(_predictor(args.predictor, seed), world, args.trials, seed, label=args.predictor)]
    else:
        worlds = [simulator.gen_world(args.world_kind, seed + i, args.dims) for i in range(args.worlds)]
        hint_maps = [simulator.default_hint_map(w, cfg.sigma) for w in worlds]
        nav = cfg.nav()
        configs = {"local-only": dataclasses.replace(nav, k=0.0), "local+map": nav}
        planner = OraclePlanner(cfg.planner())
        reports = list(simulator.eval_exploration(configs, worlds, args.trials, seed, hint_maps, planner).values())
    print(json.dumps({"suite": args.suite, "reports": [r.to_dict() for r in reports]}, sort_keys=True))
    print(simulator.format_table(reports), file=sys.stderr)
    return EXIT_OK


def cmd_benchmark(args):
    bench_pooling(args.n, args.channels, _seed(args.seed), repeats=args.repeats, stream=sys.stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualbev", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-world", help="generate a synthetic occupancy world (PGM + .geo.json)")
    p.add_argument("--kind", choices=[k.lower() for k in simulator.KINDS], type=str.lower, default="scatter")
    p.add_argument("--seed", type=int)
    p.add_argument("--dims", default="64x64", type=simulator.parse_dims)
    p.add_argument("--cell-size", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_world)

    p = sub.add_parser("make-map", help="build a traversability hint map")
    p.add_argument("--world", required=True)
    p.add_argument("--mode", choices=["synth", "fit"], default="synth")
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--trajectories")
    p.add_argument("--stroke-radius", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_map)

    p = sub.add_parser("run", help="run one closed-loop episode")
    p.add_argument("--world", required=True)
    p.add_argument("--map")
    p.add_argument("--config")
    p.add_argument("--goal", required=True, type=_xy, help="x,y in meters")
    p.add_argument("--start", type=_pose, help="x,y[,heading] (default: world center, heading 0)")
    p.add_argument("--k", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--step-budget", type=int)
    p.add_argument("--planner", choices=["oracle", "stub"], default="oracle")
    p.add_argument("--render", action="store_true", help="also write <prefix>.ppm")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="metric batteries")
    p.add_argument("--suite", choices=["temporal", "exploration"], required=True)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--predictor", choices=["oracle", "noisy", "constant"], default="oracle")
    p.add_argument("--world-kind", default="scatter", type=str.lower, choices=[k.lower() for k in simulator.KINDS])
    p.add_argument("--dims", default="80x80", type=simulator.parse_dims)
    p.add_argument("--worlds", type=int, default=5)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("benchmark-pooling", help="time naive vs interval BEV pooling")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--channels", type=int, default=8)
    p.add_argument("--seed", type=int)
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr, format="%(message)s")
    if args.command == "make-map" and args.mode == "fit" and not args.trajectories:
        parser.error("make-map --mode fit requires --trajectories")
    if args.command == "benchmark-pooling" and args.n < 1:
        parser.error("--n must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"dualbev: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, RasterFormatError, InputError, ValueError) as exc:
        print(f"dualbev: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
