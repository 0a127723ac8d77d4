"""End-to-end stages: generate, simulate, match, align, evaluate.

Each stage is a plain function over in-memory objects; the CLI wraps them
with file IO. run_all chains everything and optionally writes the artifact
set into one output directory. All stages are deterministic given the run
config, which is what makes golden-file testing of the CLI possible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from . import io_formats
from .config import RunConfig
from .evaluation import (
    ScoreReport,
    end_point_error,
    score_candidates,
    threshold_sweep,
    travel_distance_m,
)
from .geometry import PointCloud2, Pose2
from .icp import IcpResult
from .place_recognition import (
    Keyframe,
    MatchCandidate,
    NodeKey,
    Verdict,
    extract_keyframes,
    match_all,
    verified_locations,
)
from .pose_graph import (
    OptimizeStats,
    PoseGraph,
    build_pose_graph,
    merge_maps,
    optimize_pose_graph,
    register_keyframe_pair,
)
from .scenarios import scripted_scenario
from .simulate import AgentScript, Recording, simulate_recording
from .world import FloorPlan

log = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    config: RunConfig
    plan: FloorPlan
    recordings: dict[str, Recording]
    keyframes: list[Keyframe] = field(default_factory=list)
    candidates: list[MatchCandidate] = field(default_factory=list)
    verified: list[list[NodeKey]] = field(default_factory=list)
    graph: Optional[PoseGraph] = None
    initial: dict[NodeKey, Pose2] = field(default_factory=dict)
    optimized: dict[NodeKey, Pose2] = field(default_factory=dict)
    stats: Optional[OptimizeStats] = None
    graph_summary: dict = field(default_factory=dict)
    merged: Optional[PointCloud2] = None
    metrics: dict = field(default_factory=dict)

    @property
    def keyframes_by_key(self) -> dict[NodeKey, Keyframe]:
        return {kf.key: kf for kf in self.keyframes}


def stage_generate(cfg: RunConfig) -> tuple[FloorPlan, list[AgentScript]]:
    plan, scripts = scripted_scenario(
        cfg.scenario,
        cfg.seed,
        duplicate_text_count=cfg.duplicate_text_count,
        zero_noise=cfg.zero_noise,
    )
    return plan, list(scripts)


def stage_simulate(plan: FloorPlan, scripts: list[AgentScript]) -> dict[str, Recording]:
    recordings = {}
    for script in scripts:
        recordings[script.agent_id] = simulate_recording(plan, script)
    return recordings


def extract_all_keyframes(
    recordings: Mapping[str, Recording], cfg: RunConfig
) -> list[Keyframe]:
    keyframes: list[Keyframe] = []
    for agent_id in sorted(recordings):
        keyframes.extend(
            extract_keyframes(
                recordings[agent_id], fingerprint_window_s=cfg.fingerprint_window_s
            )
        )
    return keyframes


def stage_match(
    recordings: Mapping[str, Recording], cfg: RunConfig
) -> tuple[list[Keyframe], list[MatchCandidate], list[list[NodeKey]]]:
    """Keyframe extraction plus the gate cascade over all candidate pairs.

    Scores are computed for every gate even on rejected candidates so the
    evaluation stage can re-threshold them; the verdicts themselves are
    what the operational (short-circuiting) cascade would produce.
    """
    keyframes = extract_all_keyframes(recordings, cfg)
    candidates = match_all(
        keyframes,
        cfg.thresholds(),
        sigma_scale_db=cfg.sigma_scale_db,
        evaluate_all_gates=True,
    )
    verified = verified_locations(candidates)
    return keyframes, candidates, verified


def stage_align(
    keyframes: list[Keyframe],
    candidates: list[MatchCandidate],
    cfg: RunConfig,
) -> tuple[PoseGraph, dict[NodeKey, Pose2], dict[NodeKey, Pose2], OptimizeStats]:
    by_key = {kf.key: kf for kf in keyframes}
    accepted = [c for c in candidates if c.verdict is Verdict.ACCEPTED]
    loop_results: list[tuple[MatchCandidate, IcpResult]] = []
    for cand in accepted:
        result = register_keyframe_pair(
            by_key[cand.a],
            by_key[cand.b],
            max_iterations=cfg.icp_max_iterations,
            correspondence_radius_m=cfg.icp_correspondence_radius_m,
            tolerance=cfg.icp_tolerance,
        )
        loop_results.append((cand, result))
    graph = build_pose_graph(keyframes, loop_results)
    if not graph.loop_edges:
        log.warning("no usable loop closures; agents stay in their own odometry frames")
    initial = dict(graph.nodes)
    optimized, stats = optimize_pose_graph(
        graph,
        max_outer_iterations=cfg.optimizer_max_iterations,
        robust_kernel_scale=cfg.robust_kernel_scale,
        return_stats=True,
    )
    return graph, initial, optimized, stats


def graph_summary_dict(graph: PoseGraph, stats: OptimizeStats) -> dict:
    """The graph diagnostics that survive a round-trip through files."""
    return {
        "loop_edge_count": len(graph.loop_edges),
        "dropped_loop_count": graph.dropped_loop_count,
        "objective_initial": stats.initial_objective,
        "objective_final": stats.final_objective,
    }


def _metrics_from_pr(report: ScoreReport) -> dict:
    def row(m) -> dict:
        return {
            "precision": m.precision,
            "recall": m.recall,
            "true_positives": m.true_positives,
            "false_positives": m.false_positives,
            "false_negatives": m.false_negatives,
        }

    return {
        "text_only": row(report.text_only),
        "wifi_only": row(report.wifi_only),
        "fused": row(report.fused),
    }


def _find_anchor_labels(plan: FloorPlan) -> Optional[tuple[str, str]]:
    start = end = None
    for label, _ in plan.named_anchors:
        if label.endswith("/start"):
            start = label
        elif label.endswith("/end"):
            end = label
    if start is None or end is None:
        return None
    return start, end


def stage_evaluate(result: PipelineResult) -> dict:
    cfg = result.config
    by_key = result.keyframes_by_key
    report = score_candidates(result.candidates, by_key, cfg.thresholds())
    metrics: dict = {
        "scene": cfg.scenario,
        "seed": cfg.seed,
        "thresholds": {"alpha": cfg.alpha, "beta": cfg.beta, "gamma": cfg.gamma},
        "candidate_count": report.candidate_count,
        "true_pair_count": report.positive_count,
        "precision_recall": _metrics_from_pr(report),
    }
    if cfg.sweep:
        metrics["sweep"] = [
            {
                "alpha": row.alpha,
                "beta": row.beta,
                "gamma": row.gamma,
                **_metrics_from_pr(
                    ScoreReport(row.text_only, row.wifi_only, row.fused, 0, 0)
                ),
            }
            for row in threshold_sweep(result.candidates, by_key)
        ]

    trajectory: dict = {
        "travel_distance_m": travel_distance_m(result.recordings),
        "keyframe_count": len(result.keyframes),
        "loop_edge_count": 0,
        "dropped_loop_count": 0,
    }
    trajectory.update(result.graph_summary)

    labels = _find_anchor_labels(result.plan)
    if labels and result.optimized:
        anchors = dict(result.plan.named_anchors)
        try:
            baseline = end_point_error(
                anchors, labels[0], labels[1], result.keyframes, result.recordings,
                result.initial,
            )
            optimized = end_point_error(
                anchors, labels[0], labels[1], result.keyframes, result.recordings,
                result.optimized,
            )
        except ValueError as exc:
            log.warning("end-point error unavailable: %s", exc)
        else:
            base_e, opt_e = baseline.end_point_error_m, optimized.end_point_error_m
            trajectory.update(
                {
                    "anchor_start": labels[0],
                    "anchor_end": labels[1],
                    "separation_truth_m": baseline.truth_separation_m,
                    "epe_baseline_m": base_e,
                    "epe_optimized_m": opt_e,
                    "epe_reduction_fraction": (
                        (base_e - opt_e) / base_e if base_e > 0.0 else 0.0
                    ),
                }
            )
    metrics["trajectory"] = trajectory
    return metrics


def run_all(cfg: RunConfig, *, out_dir: Optional[Path] = None) -> PipelineResult:
    """Run every stage; write the artifact set when out_dir is given."""
    plan, scripts = stage_generate(cfg)
    recordings = stage_simulate(plan, scripts)
    result = PipelineResult(config=cfg, plan=plan, recordings=recordings)
    result.keyframes, result.candidates, result.verified = stage_match(recordings, cfg)
    result.graph, result.initial, result.optimized, result.stats = stage_align(
        result.keyframes, result.candidates, cfg
    )
    result.graph_summary = graph_summary_dict(result.graph, result.stats)
    result.merged = merge_maps(
        result.optimized, result.keyframes, voxel_size_m=cfg.voxel_size_m
    )
    result.metrics = stage_evaluate(result)
    if out_dir is not None:
        write_artifacts(result, out_dir)
    return result


def write_artifacts(result: PipelineResult, out_dir: Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    paths: dict[str, Path] = {}

    paths["config"] = out_dir / "config.json"
    # out_dir is where the file already lives; writing it would make
    # otherwise identical runs differ byte-wise.
    io_formats.save_json(
        paths["config"], {k: v for k, v in cfg.to_dict().items() if k != "out_dir"}
    )
    paths["floorplan"] = out_dir / "floorplan.json"
    io_formats.save_floorplan(paths["floorplan"], result.plan)
    for p in io_formats.save_recordings(out_dir, result.recordings):
        paths[p.stem] = p
    paths["match_report"] = out_dir / "match_report.json"
    io_formats.save_match_report(
        paths["match_report"],
        result.candidates,
        result.verified,
        {
            "alpha": cfg.alpha,
            "beta": cfg.beta,
            "gamma": cfg.gamma,
            "min_loop_separation_s": cfg.min_loop_separation_s,
            "sigma_scale_db": cfg.sigma_scale_db,
        },
    )
    paths["trajectories"] = out_dir / "trajectories.json"
    io_formats.save_trajectories(
        paths["trajectories"], result.initial, result.optimized, result.graph_summary
    )
    if result.merged is not None:
        paths["merged_map"] = out_dir / "merged_map.json"
        io_formats.save_merged_map(paths["merged_map"], result.merged)
    paths["metrics"] = out_dir / "metrics.json"
    io_formats.save_json(paths["metrics"], result.metrics)
    return paths
