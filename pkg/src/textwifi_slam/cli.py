"""Command-line front end for the mapping pipeline.

Stages share one output directory: generate and simulate write world and
sensor files into it, match/align/evaluate read their inputs back from it.
Every stage re-resolves configuration the same way (flags beat config file
beats defaults), and a config.json written alongside the artifacts lets
later stages run with the exact settings of earlier ones.

Exit codes: 0 success, 1 usage or configuration error, 2 pipeline failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io_formats, pipeline
from .config import RunConfig, build_config
from .scenarios import scenario_names

log = logging.getLogger(__name__)

USAGE_ERROR = 1
PIPELINE_ERROR = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; the contract here says 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="textwifi-slam",
        description="Multi-agent mapping with text and WiFi place recognition.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="config file (JSON)")
    common.add_argument("--seed", type=int, default=None, help="master random seed")
    common.add_argument("--alpha", type=float, default=None, help="text gate threshold")
    common.add_argument("--beta", type=float, default=None, help="MAC overlap threshold")
    common.add_argument("--gamma", type=float, default=None, help="RSS similarity threshold")
    common.add_argument("--sweep", action="store_true", help="add a threshold sweep to metrics")
    common.add_argument("--out", type=Path, default=None, help="artifact directory")
    common.add_argument(
        "--scenario", choices=scenario_names(), default=None, help="scripted scenario"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, desc in (
        ("generate", _cmd_generate, "write the floorplan for the chosen scenario"),
        ("simulate", _cmd_simulate, "write per-agent sensor recordings"),
        ("match", _cmd_match, "run place recognition over recorded text events"),
        ("align", _cmd_align, "register matches, optimize, merge the map"),
        ("evaluate", _cmd_evaluate, "score matches and trajectory error"),
        ("run-all", _cmd_run_all, "all of the above in one go"),
    ):
        p = sub.add_parser(name, parents=[common], help=desc)
        p.set_defaults(fn=fn)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    flag_overrides = {
        "seed": args.seed,
        "alpha": args.alpha,
        "beta": args.beta,
        "gamma": args.gamma,
        "scenario": args.scenario,
        "out_dir": str(args.out) if args.out is not None else None,
        "sweep": True if args.sweep else None,
    }
    config_path = args.config
    if config_path is None:
        # Reuse the settings an earlier stage dropped next to its artifacts.
        candidate = _out_dir_from(args) / "config.json"
        if candidate.is_file():
            config_path = candidate
    return build_config(config_path=config_path, flag_overrides=flag_overrides)


def _persistable(cfg: RunConfig) -> dict:
    return {k: v for k, v in cfg.to_dict().items() if k != "out_dir"}


def _out_dir_from(args: argparse.Namespace) -> Path:
    if args.out is not None:
        return args.out
    return Path(RunConfig().out_dir)


def _cmd_generate(cfg: RunConfig, out_dir: Path) -> None:
    plan, _ = pipeline.stage_generate(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    io_formats.save_json(out_dir / "config.json", _persistable(cfg))
    io_formats.save_floorplan(out_dir / "floorplan.json", plan)
    print(f"wrote floorplan.json ({len(plan.signs)} signs, {len(plan.aps)} APs) to {out_dir}")


def _cmd_simulate(cfg: RunConfig, out_dir: Path) -> None:
    plan, scripts = pipeline.stage_generate(cfg)
    recordings = pipeline.stage_simulate(plan, scripts)
    out_dir.mkdir(parents=True, exist_ok=True)
    io_formats.save_json(out_dir / "config.json", _persistable(cfg))
    io_formats.save_floorplan(out_dir / "floorplan.json", plan)
    io_formats.save_recordings(out_dir, recordings)
    events = sum(
        len(r.odometry) + len(r.scans) + len(r.texts) + len(r.wifi) + len(r.truth)
        for r in recordings.values()
    )
    print(f"wrote {len(recordings)} recordings ({events} events) to {out_dir}")


def _cmd_match(cfg: RunConfig, out_dir: Path) -> None:
    recordings = io_formats.load_recordings(out_dir)
    keyframes, candidates, verified = pipeline.stage_match(recordings, cfg)
    io_formats.save_match_report(
        out_dir / "match_report.json",
        candidates,
        verified,
        {
            "alpha": cfg.alpha,
            "beta": cfg.beta,
            "gamma": cfg.gamma,
            "min_loop_separation_s": cfg.min_loop_separation_s,
            "sigma_scale_db": cfg.sigma_scale_db,
        },
    )
    accepted = sum(1 for c in candidates if c.verdict.value == "accepted")
    print(
        f"{len(keyframes)} keyframes, {len(candidates)} candidates, "
        f"{accepted} accepted, {len(verified)} verified locations"
    )


def _cmd_align(cfg: RunConfig, out_dir: Path) -> None:
    recordings = io_formats.load_recordings(out_dir)
    candidates, _, _ = io_formats.load_match_report(out_dir / "match_report.json")
    keyframes = pipeline.extract_all_keyframes(recordings, cfg)
    graph, initial, optimized, stats = pipeline.stage_align(keyframes, candidates, cfg)
    summary = pipeline.graph_summary_dict(graph, stats)
    io_formats.save_trajectories(out_dir / "trajectories.json", initial, optimized, summary)
    merged = pipeline.merge_maps(optimized, keyframes, voxel_size_m=cfg.voxel_size_m)
    io_formats.save_merged_map(out_dir / "merged_map.json", merged)
    print(
        f"{len(graph.nodes)} nodes, {len(graph.loop_edges)} loop edges "
        f"({graph.dropped_loop_count} dropped), merged map {len(merged)} points"
    )


def _cmd_evaluate(cfg: RunConfig, out_dir: Path) -> None:
    plan = io_formats.load_floorplan(out_dir / "floorplan.json")
    recordings = io_formats.load_recordings(out_dir)
    candidates, verified, _ = io_formats.load_match_report(out_dir / "match_report.json")
    keyframes = pipeline.extract_all_keyframes(recordings, cfg)
    result = pipeline.PipelineResult(
        config=cfg,
        plan=plan,
        recordings=recordings,
        keyframes=keyframes,
        candidates=candidates,
        verified=verified,
    )
    result.initial, result.optimized, result.graph_summary = io_formats.load_trajectories(
        out_dir / "trajectories.json"
    )
    result.metrics = pipeline.stage_evaluate(result)
    io_formats.save_json(out_dir / "metrics.json", result.metrics)
    pr = result.metrics["precision_recall"]
    print(
        "precision/recall: "
        + ", ".join(
            f"{kind} {pr[kind]['precision']:.3f}/{pr[kind]['recall']:.3f}"
            for kind in ("text_only", "wifi_only", "fused")
        )
    )


def _cmd_run_all(cfg: RunConfig, out_dir: Path) -> None:
    result = pipeline.run_all(cfg, out_dir=out_dir)
    pr = result.metrics["precision_recall"]["fused"]
    traj = result.metrics["trajectory"]
    line = (
        f"fused precision {pr['precision']:.3f} recall {pr['recall']:.3f}; "
        f"{traj['loop_edge_count']} loop edges"
    )
    if "epe_optimized_m" in traj:
        line += f"; end-point error {traj['epe_optimized_m']:.3f} m"
    print(line)
    print(f"artifacts in {out_dir}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _resolve_config(args)
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    out_dir = Path(cfg.out_dir)
    try:
        args.fn(cfg, out_dir)
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        log.debug("stage failed", exc_info=True)
        print(f"pipeline error: {exc}", file=sys.stderr)
        return PIPELINE_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
