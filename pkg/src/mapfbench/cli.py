"""Command-line entry point binding generation, ingestion, evaluation,
benchmarking, rendering, and reporting.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error. All
randomness flows from explicit --seed flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mapfbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a procedurally generated map as ASCII")
    p.add_argument("--family", choices=["random", "maze", "warehouse"], required=True)
    p.add_argument("--width", type=int, default=21)
    p.add_argument("--height", type=int, default=21)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loop-prob", type=float, default=0.1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("ingest", help="convert a MovingAI .map file (optionally sliced)")
    p.add_argument("--movingai", required=True, help="path to the .map file")
    p.add_argument("--tile", type=int, default=None, help="slice into tile x tile pieces")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("run", help="execute an evaluation suite from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="results JSONL path")
    p.add_argument("--benchmark-maps", action="store_true",
                   help="register the built-in benchmark maps before running")

    p = sub.add_parser("bench", help="measure environment throughput (OPS / SPS)")
    p.add_argument("--agents", type=int, default=64)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--lifelong", action="store_true")

    p = sub.add_parser("render", help="render an instance from a results file to SVG")
    p.add_argument("--results", required=True)
    p.add_argument("--instance", type=int, default=0, help="record line index (0-based)")
    p.add_argument("--out", required=True)
    p.add_argument("--animate", action="store_true", help="re-run the episode and animate it")
    p.add_argument("--algo", default=None,
                   help="policy name for --animate (defaults to the record's alias)")
    p.add_argument("--step-duration", type=float, default=0.4)

    p = sub.add_parser("report", help="aggregate results files into the six meta-metrics")
    p.add_argument("--results", nargs="+", required=True)
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _cmd_generate(args) -> int:
    from .mapgen import gen_maze, gen_random, gen_warehouse
    from .maps_io import to_ascii

    if args.family == "random":
        grid = gen_random(args.width, args.height, args.density, args.seed)
    elif args.family == "maze":
        grid = gen_maze(args.width, args.height, args.seed, args.loop_prob)
    else:
        grid = gen_warehouse()
    Path(args.out).write_text(to_ascii(grid), encoding="utf-8")
    print(f"wrote {grid.width}x{grid.height} {args.family} map to {args.out}")
    return 0


def _cmd_ingest(args) -> int:
    from .maps_io import ingest_movingai, slice_tiles, to_ascii

    src = Path(args.movingai)
    grid = ingest_movingai(src.read_text(encoding="utf-8"), name=src.stem)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grids = [grid] if args.tile is None else slice_tiles(grid, args.tile)
    for g in grids:
        (out_dir / f"{g.name}.map.txt").write_text(to_ascii(g), encoding="utf-8")
    print(f"wrote {len(grids)} map(s) to {out_dir}")
    return 0


def _load_config(path: str):
    import yaml

    from .maps_io import parse_eval_config

    return parse_eval_config(yaml.safe_load(Path(path).read_text(encoding="utf-8")))


def _cmd_run(args) -> int:
    from .harness import persist, run_suite
    from .maps_io import register_benchmark_maps

    if args.benchmark_maps:
        register_benchmark_maps()
    config = _load_config(args.config)
    records, manifest = run_suite(config, workers=args.workers)
    persist(records, args.out)
    manifest_path = Path(args.out).with_suffix(".manifest.json")
    manifest_path.write_text(json.dumps(vars(manifest), indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    failures = sum(1 for r in records if r.error)
    print(f"wrote {len(records)} records to {args.out} ({failures} failed)")
    return 0


def _cmd_bench(args) -> int:
    from .core import GridConfig
    from .harness import bench_speed

    config = GridConfig(
        width=args.size,
        height=args.size,
        density=args.density,
        num_agents=args.agents,
        seed=args.seed,
        on_target="restart" if args.lifelong else "nothing",
    )
    ops, sps = bench_speed(config, duration_seconds=args.duration)
    print(f"agents={args.agents} size={args.size}x{args.size} "
          f"OPS={ops:,.0f} SPS={sps:,.0f}")
    return 0


def _cmd_render(args) -> int:
    from .core import GridConfig, create_env
    from .harness import load, _env_config
    from .maps_io import register_benchmark_maps, resolve_map
    from .obs import export_global_state
    from .solvers import make_policy
    from .viz import record_trajectory, render_animation, render_frame

    records = load(args.results)
    if not 0 <= args.instance < len(records):
        raise ValueError(f"instance index {args.instance} outside 0..{len(records) - 1}")
    record = records[args.instance]
    try:
        resolve_map(record.instance.map_name)
    except KeyError:
        register_benchmark_maps()
    env = create_env(_env_config(record.instance, None))
    if args.animate:
        name = args.algo or record.algorithm_alias
        policy = make_policy(name, env.grid, seed=record.instance.seed)
        svg = render_animation(record_trajectory(env, policy), args.step_duration)
    else:
        svg = render_frame(export_global_state(env))
    Path(args.out).write_text(svg, encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def _cmd_report(args) -> int:
    from .harness import load
    from .maps_io import register_benchmark_maps, resolve_map
    from .metrics import build_report, radar_data, report_to_csv, report_to_json

    records = []
    for path in args.results:
        records.extend(load(path))
    records = [r for r in records if not r.error]
    if not records:
        raise ValueError("no successful records to report on")
    if any(r.instance.dataset_tag == "cities" for r in records):
        try:
            for r in records:
                resolve_map(r.instance.map_name)
        except KeyError:
            register_benchmark_maps()
    report = build_report(records)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.json").write_text(
        json.dumps(report_to_json(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out_dir / "metrics.csv").write_text(report_to_csv(report), encoding="utf-8")
    (out_dir / "radar.json").write_text(
        json.dumps(radar_data(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote metrics.json, metrics.csv, radar.json to {out_dir}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "ingest": _cmd_ingest,
    "run": _cmd_run,
    "bench": _cmd_bench,
    "render": _cmd_render,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return _COMMANDS[args.command](args)
    except (FileNotFoundError, KeyError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
