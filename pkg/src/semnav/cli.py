"""Command-line entry points: run episode batches, plot runs, report metrics.

    semnav run --scenes 'scenes/*.json' --episodes 2 --oracle scripted \
        --seed 7 --out runs/base
    semnav plot --log runs/base/episode_000.jsonl --scene scenes/a.json \
        --out runs/base/episode_000.svg
    semnav report runs/base runs/ablated
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .affordance import field_to_csv
from .geometry import camera_pose, intrinsics_from_fov
from .oracle import EndpointConfig, RemoteOracle, ScriptedOracle
from .plot import render_run_svg
from .sim.episode import AgentConfig, run_episode
from .sim.metrics import compute_metrics, episode_spl
from .sim.scene import EpisodeSpec, load_scene, sample_free_position

ABLATION_FLAGS = ("disable_frontier_attr", "disable_room_attr", "disable_object_attr")
ORACLE_MODES = ("scripted", "remote", "vlm-only", "detector-only")

METRIC_COLUMNS = (
    "episode", "scene", "target", "seed", "success", "spl",
    "path_length", "shortest_length", "dtg", "steps",
)


class _MetricsRow:
    """Minimal episode-result view for compute_metrics over CSV rows."""

    def __init__(self, success, path_length, shortest_length, dtg):
        self.success = success
        self.path_length = path_length
        self.shortest_length = shortest_length
        self.dtg = dtg


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semnav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run episode batches over scene files")
    run_p.add_argument("--scenes", nargs="+", required=True, help="scene JSON globs")
    run_p.add_argument("--episodes", type=int, default=1, help="episodes per scene")
    run_p.add_argument("--oracle", choices=ORACLE_MODES, default="scripted")
    run_p.add_argument("--ablate", default="", help=f"comma list of {', '.join(ABLATION_FLAGS)}")
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--max-steps", type=int, default=12)
    run_p.add_argument("--success-distance", type=float, default=1.0)
    run_p.add_argument("--num-headings", type=int, default=12)
    run_p.add_argument("--frame-size", type=int, default=64)
    run_p.add_argument("--no-history", action="store_true", help="drop the history affordance")
    run_p.add_argument("--dump-fields", action="store_true", help="write final affordance field CSVs")
    run_p.add_argument("--label", default="", help="configuration label for reports")

    plot_p = sub.add_parser("plot", help="render a trajectory log to SVG")
    plot_p.add_argument("--log", required=True)
    plot_p.add_argument("--scene", required=True)
    plot_p.add_argument("--out", required=True)
    plot_p.add_argument("--heatmap", default="", help="field CSV to overlay")

    report_p = sub.add_parser("report", help="aggregate metrics CSVs into a table")
    report_p.add_argument("dirs", nargs="+")
    return parser


def _agent_config(args) -> AgentConfig:
    flags = [f for f in args.ablate.split(",") if f]
    for flag in flags:
        if flag not in ABLATION_FLAGS:
            raise ValueError(f"unknown ablation flag {flag!r}")
    mode = {"scripted": "combined", "remote": "combined"}.get(args.oracle, args.oracle)
    return AgentConfig(
        intrinsics=intrinsics_from_fov(args.frame_size, args.frame_size, 90.0),
        decision_mode=mode,
        ablate_frontiers="disable_frontier_attr" in flags,
        ablate_rooms="disable_room_attr" in flags,
        ablate_objects="disable_object_attr" in flags,
        use_history=not args.no_history,
    )


def _make_oracle(args):
    if args.oracle == "remote":
        return RemoteOracle(EndpointConfig.from_env())
    return ScriptedOracle()


def _episode_record(index, scene_path, spec, result) -> dict:
    return {
        "episode": index,
        "scene": scene_path,
        "target": spec.target,
        "seed": spec.seed,
        "success": int(result.success),
        "spl": episode_spl(result.success, result.path_length, result.shortest_length),
        "path_length": result.path_length,
        "shortest_length": result.shortest_length,
        "dtg": result.dtg,
        "steps": result.steps,
    }


def _write_metrics_csv(path, rows) -> None:
    summary = compute_metrics(
        [_MetricsRow(bool(r["success"]), r["path_length"], r["shortest_length"], r["dtg"]) for r in rows]
    )
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r["episode"], r["scene"], r["target"], r["seed"], r["success"],
                    f"{r['spl']:.6f}", f"{r['path_length']:.6f}",
                    f"{r['shortest_length']:.6f}", f"{r['dtg']:.6f}", r["steps"],
                ]
            )
        writer.writerow(
            [
                "ALL", "*", "*", "*", f"{summary.sr:.6f}", f"{summary.spl:.6f}",
                f"{np.mean([r['path_length'] for r in rows]):.6f}",
                f"{np.mean([r['shortest_length'] for r in rows]):.6f}",
                f"{summary.dtg:.6f}", f"{np.mean([r['steps'] for r in rows]):.6f}",
            ]
        )


def _write_log(path, spec, result) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for record in result.records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
        summary = {
            "type": "summary",
            "success": int(result.success),
            "path_length": round(result.path_length, 6),
            "shortest_length": round(result.shortest_length, 6),
            "dtg": round(result.dtg, 6),
            "steps": result.steps,
            "target": spec.target,
            "graph": result.graph,
            "frontiers": [[round(float(v), 6) for v in p] for p in result.frontier_points],
            "trajectory": [[round(float(v), 6) for v in p] for p in result.trajectory],
            "events": result.events,
        }
        fh.write(json.dumps(summary, sort_keys=True) + "\n")


def cmd_run(args) -> int:
    out_dir = Path(args.out)
    scene_paths = []
    for pattern in args.scenes:
        matches = sorted(glob.glob(pattern))
        if not matches and Path(pattern).exists():
            matches = [pattern]
        scene_paths.extend(matches)
    if not scene_paths:
        print(f"error: no scene files match {args.scenes}", file=sys.stderr)
        return 2
    try:
        config = _agent_config(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    oracle = _make_oracle(args)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    episode_meta = []
    index = 0
    for scene_path in scene_paths:
        try:
            scene = load_scene(scene_path)
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot load scene {scene_path}: {exc}", file=sys.stderr)
            return 2
        for k in range(args.episodes):
            seed = args.seed + index
            rng = np.random.default_rng(seed)
            start = sample_free_position(scene, rng, clearance=0.6)
            target = str(rng.choice(scene.class_names()))
            spec = EpisodeSpec(
                scene=scene,
                start=camera_pose(start, 0.0),
                target=target,
                max_steps=args.max_steps,
                success_distance=args.success_distance,
                num_headings=args.num_headings,
                seed=seed,
            )
            result = run_episode(spec, config, oracle, keep_final_field=args.dump_fields)
            _write_log(out_dir / f"episode_{index:03d}.jsonl", spec, result)
            if args.dump_fields and result.final_field is not None:
                field_to_csv(result.final_field, out_dir / f"field_{index:03d}.csv")
            rows.append(_episode_record(index, scene_path, spec, result))
            episode_meta.append(
                {
                    "episode": index,
                    "scene": scene_path,
                    "seed": seed,
                    "target": target,
                    "start": [round(float(v), 6) for v in start],
                }
            )
            index += 1
    _write_metrics_csv(out_dir / "metrics.csv", rows)
    manifest = {
        "label": args.label or out_dir.name,
        "config": {
            "scenes": list(args.scenes),
            "episodes": args.episodes,
            "oracle": args.oracle,
            "ablate": sorted(f for f in args.ablate.split(",") if f),
            "seed": args.seed,
            "max_steps": args.max_steps,
            "success_distance": args.success_distance,
            "num_headings": args.num_headings,
            "frame_size": args.frame_size,
            "use_history": not args.no_history,
        },
        "episodes": episode_meta,
        "versions": {
            "semnav": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    with open(out_dir / "manifest.json", "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _read_heatmap(path):
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.append(
                (float(row["x"]), float(row["y"]), float(row["z"]),
                 float(row["score"]), bool(int(row["masked"])))
            )
    return rows


def cmd_plot(args) -> int:
    try:
        scene = load_scene(args.scene)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load scene {args.scene}: {exc}", file=sys.stderr)
        return 2
    summary = None
    try:
        with open(args.log, "r", encoding="ascii") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    print(f"error: {args.log}:{lineno}: {exc}", file=sys.stderr)
                    return 2
                if record.get("type") == "summary":
                    summary = record
    except OSError as exc:
        print(f"error: cannot read log: {exc}", file=sys.stderr)
        return 2
    if summary is None:
        print("error: log has no summary record", file=sys.stderr)
        return 2
    heatmap = _read_heatmap(args.heatmap) if args.heatmap else None
    svg = render_run_svg(
        scene,
        trajectory=summary.get("trajectory", []),
        graph=summary.get("graph", {}),
        frontier_points=summary.get("frontiers", []),
        heatmap_rows=heatmap,
    )
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write(svg)
    return 0


def cmd_report(dirs) -> int:
    rows = []
    for d in dirs:
        metrics_path = Path(d) / "metrics.csv"
        manifest_path = Path(d) / "manifest.json"
        if not metrics_path.exists():
            print(f"error: {metrics_path} missing", file=sys.stderr)
            return 2
        label = Path(d).name
        if manifest_path.exists():
            with open(manifest_path, "r", encoding="ascii") as fh:
                label = json.load(fh).get("label", label)
        with open(metrics_path, "r", encoding="ascii") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != METRIC_COLUMNS:
                print(f"error: {metrics_path} has unexpected columns", file=sys.stderr)
                return 2
            episodes = [r for r in reader if r["episode"] != "ALL"]
        if not episodes:
            print(f"error: {metrics_path} has no episode rows", file=sys.stderr)
            return 2
        summary = compute_metrics(
            [
                _MetricsRow(
                    bool(int(r["success"])), float(r["path_length"]),
                    float(r["shortest_length"]), float(r["dtg"]),
                )
                for r in episodes
            ]
        )
        rows.append((label, len(episodes), summary.sr, summary.spl, summary.dtg))
    print(f"{'configuration':<28} {'episodes':>8} {'SR':>8} {'SPL':>8} {'DTG':>8}")
    for label, count, sr, spl, dtg in rows:
        print(f"{label:<28} {count:>8d} {sr:>8.3f} {spl:>8.3f} {dtg:>8.3f}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "plot":
        return cmd_plot(args)
    return cmd_report(args.dirs)


if __name__ == "__main__":
    sys.exit(main())
