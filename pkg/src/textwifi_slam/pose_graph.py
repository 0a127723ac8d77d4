"""Pose-graph construction, robust optimization, and map merging.

Nodes are keyframes, odometry edges chain consecutive keyframes of one
agent, and loop edges carry scan-registration results between matched
keyframes. The optimizer is iteratively reweighted Gauss-Newton with a
Huber kernel and Levenberg-style damping: a step is only taken when it
lowers the robust objective, so the objective history is non-increasing by
construction (and asserted).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .geometry import Pose2, PointCloud2, relative_pose, transform_points
from .icp import (
    DEFAULT_CORRESPONDENCE_RADIUS_M,
    IcpResult,
    icp_register,
    icp_register_multistart,
)
from .place_recognition import Keyframe, MatchCandidate, NodeKey

log = logging.getLogger(__name__)

DEFAULT_ODOMETRY_WEIGHT = 1.0
DEFAULT_WEIGHT_FLOOR = 1e-6
DEFAULT_MAX_OUTER_ITERATIONS = 50
DEFAULT_ROBUST_KERNEL_SCALE = 1.0

# A registration only short-circuits the rotation sweep when its mean
# squared error is this fraction of the squared correspondence radius or
# better. Correct same-place fits land orders of magnitude below it.
SOLID_FIT_MSE_FRACTION = 0.05


@dataclass(frozen=True)
class PoseGraphEdge:
    a: NodeKey
    b: NodeKey
    relative: Pose2  # expected pose of b in the frame of a
    weight: float
    kind: str  # "odometry" or "loop"


@dataclass
class PoseGraph:
    nodes: dict[NodeKey, Pose2]
    odometry_edges: list[PoseGraphEdge] = field(default_factory=list)
    loop_edges: list[PoseGraphEdge] = field(default_factory=list)
    dropped_loop_count: int = 0

    @property
    def edges(self) -> list[PoseGraphEdge]:
        return [*self.odometry_edges, *self.loop_edges]


@dataclass
class OptimizeStats:
    """Per-component objective traces, for diagnostics and tests."""

    objective_histories: list[list[float]] = field(default_factory=list)

    @property
    def initial_objective(self) -> float:
        return sum(h[0] for h in self.objective_histories if h)

    @property
    def final_objective(self) -> float:
        return sum(h[-1] for h in self.objective_histories if h)


def register_keyframe_pair(a: Keyframe, b: Keyframe, **icp_kwargs) -> IcpResult:
    """Register b's scan into a's scan frame.

    The first initial guess is the relative pose the odometry already
    implies; if that converges with solid overlap and a tight fit it wins.
    Otherwise the co-located assumption is tried at four headings, since
    two agents can face a sign from opposite directions.

    The fit-quality bar is load-bearing: in a self-similar corridor a badly
    drifted odometry guess can settle into a "converged" registration one
    room pitch off, with plenty of overlap but a residual far above what
    the true alignment leaves. Such a fit must not skip the sweep.
    """
    radius = icp_kwargs.get("correspondence_radius_m", DEFAULT_CORRESPONDENCE_RADIUS_M)
    solid_mse = SOLID_FIT_MSE_FRACTION * radius * radius
    odometry_initial = relative_pose(a.odom_pose, b.odom_pose)
    first = icp_register(b.scan, a.scan, odometry_initial, **icp_kwargs)
    if first.converged and first.inlier_fraction >= 0.6 and first.mean_sq_error <= solid_mse:
        return first
    rotations = [
        Pose2(0.0, 0.0, 0.0),
        Pose2(0.0, 0.0, math.pi / 2.0),
        Pose2(0.0, 0.0, -math.pi / 2.0),
        Pose2(0.0, 0.0, math.pi),
    ]
    rest = icp_register_multistart(b.scan, a.scan, rotations, **icp_kwargs)
    if (first.converged, -first.mean_sq_error) >= (rest.converged, -rest.mean_sq_error):
        return first
    return rest


def build_pose_graph(
    keyframes: Sequence[Keyframe],
    loop_results: Sequence[tuple[MatchCandidate, IcpResult]],
    *,
    odometry_weight: float = DEFAULT_ODOMETRY_WEIGHT,
    weight_floor: float = DEFAULT_WEIGHT_FLOOR,
) -> PoseGraph:
    """Assemble nodes and edges from keyframes and registered matches.

    Non-converged registrations contribute no edge; they are counted in
    dropped_loop_count and logged. Loop edges are weighted by the inverse of
    the registration error, floored to keep weights finite.
    """
    nodes = {kf.key: kf.odom_pose for kf in sorted(keyframes, key=lambda k: k.key)}
    graph = PoseGraph(nodes=nodes)

    by_agent: dict[str, list[Keyframe]] = {}
    for kf in keyframes:
        by_agent.setdefault(kf.agent_id, []).append(kf)
    for agent in sorted(by_agent):
        chain = sorted(by_agent[agent], key=lambda k: k.keyframe_id)
        for prev, cur in zip(chain, chain[1:]):
            graph.odometry_edges.append(
                PoseGraphEdge(
                    prev.key,
                    cur.key,
                    relative_pose(prev.odom_pose, cur.odom_pose),
                    odometry_weight,
                    "odometry",
                )
            )

    for candidate, result in loop_results:
        if not result.converged:
            graph.dropped_loop_count += 1
            log.warning(
                "dropping loop %s-%s: registration did not converge", candidate.a, candidate.b
            )
            continue
        weight = 1.0 / max(result.mean_sq_error, weight_floor)
        graph.loop_edges.append(
            PoseGraphEdge(candidate.a, candidate.b, result.transform, weight, "loop")
        )
    return graph


def _connected_components(graph: PoseGraph) -> list[list[NodeKey]]:
    parent = {key: key for key in graph.nodes}

    def find(k: NodeKey) -> NodeKey:
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for edge in graph.edges:
        ra, rb = find(edge.a), find(edge.b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[NodeKey, list[NodeKey]] = {}
    for key in graph.nodes:
        groups.setdefault(find(key), []).append(key)
    return sorted(sorted(m) for m in groups.values())


def _wrap_angles(values: np.ndarray) -> np.ndarray:
    wrapped = values % (2.0 * math.pi)
    return np.where(wrapped > math.pi, wrapped - 2.0 * math.pi, wrapped)


class _ComponentProblem:
    """Dense robust least squares for one connected component."""

    def __init__(self, keys: list[NodeKey], graph: PoseGraph, kernel_scale: float):
        self.keys = keys
        self.kernel = kernel_scale
        index = {key: i for i, key in enumerate(keys)}
        edges = [e for e in graph.edges if e.a in index and e.b in index]
        self.ii = np.array([index[e.a] for e in edges], dtype=int)
        self.jj = np.array([index[e.b] for e in edges], dtype=int)
        self.z = np.array(
            [[e.relative.x, e.relative.y, e.relative.theta] for e in edges], dtype=float
        ).reshape(-1, 3)
        self.w = np.array([e.weight for e in edges], dtype=float)
        self.x = np.array(
            [[graph.nodes[k].x, graph.nodes[k].y, graph.nodes[k].theta] for k in keys],
            dtype=float,
        )

    @property
    def n_edges(self) -> int:
        return len(self.w)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        xi, xj = x[self.ii], x[self.jj]
        ci, si = np.cos(xi[:, 2]), np.sin(xi[:, 2])
        dt = xj[:, :2] - xi[:, :2]
        rel_x = ci * dt[:, 0] + si * dt[:, 1]
        rel_y = -si * dt[:, 0] + ci * dt[:, 1]
        cz, sz = np.cos(self.z[:, 2]), np.sin(self.z[:, 2])
        ex = rel_x - self.z[:, 0]
        ey = rel_y - self.z[:, 1]
        res = np.empty((self.n_edges, 3))
        res[:, 0] = cz * ex + sz * ey
        res[:, 1] = -sz * ex + cz * ey
        res[:, 2] = _wrap_angles(xj[:, 2] - xi[:, 2] - self.z[:, 2])
        return res

    def objective(self, x: np.ndarray) -> float:
        if self.n_edges == 0:
            return 0.0
        res = self.residuals(x)
        norms = np.linalg.norm(res, axis=1)
        delta = self.kernel
        rho = np.where(
            norms <= delta,
            0.5 * norms**2,
            delta * (norms - 0.5 * delta),
        )
        return float(np.sum(self.w * rho))

    def build_normal_equations(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = len(self.keys)
        H = np.zeros((3 * n, 3 * n))
        b = np.zeros(3 * n)
        if self.n_edges == 0:
            return H, b
        res = self.residuals(x)
        norms = np.linalg.norm(res, axis=1)
        hub = np.where(norms <= self.kernel, 1.0, self.kernel / np.maximum(norms, 1e-300))
        omega = self.w * hub

        xi = x[self.ii]
        xj = x[self.jj]
        ci, si = np.cos(xi[:, 2]), np.sin(xi[:, 2])
        cz, sz = np.cos(self.z[:, 2]), np.sin(self.z[:, 2])
        dt = xj[:, :2] - xi[:, :2]
        m = self.n_edges

        # R(theta_z)^T @ R(theta_i)^T = R(theta_i + theta_z)^T, per edge.
        rzt_rit = np.empty((m, 2, 2))
        rzt_rit[:, 0, 0] = cz * ci - sz * si
        rzt_rit[:, 0, 1] = cz * si + sz * ci
        rzt_rit[:, 1, 0] = -(cz * si + sz * ci)
        rzt_rit[:, 1, 1] = cz * ci - sz * si

        # d(R_i^T)/d(theta_i) @ dt, then rotated by R_z^T.
        dr_dt_x = -si * dt[:, 0] + ci * dt[:, 1]
        dr_dt_y = -ci * dt[:, 0] - si * dt[:, 1]
        dtheta_col_x = cz * dr_dt_x + sz * dr_dt_y
        dtheta_col_y = -sz * dr_dt_x + cz * dr_dt_y

        A = np.zeros((m, 3, 3))
        A[:, :2, :2] = -rzt_rit
        A[:, 0, 2] = dtheta_col_x
        A[:, 1, 2] = dtheta_col_y
        A[:, 2, 2] = -1.0
        B = np.zeros((m, 3, 3))
        B[:, :2, :2] = rzt_rit
        B[:, 2, 2] = 1.0

        wA = A * omega[:, None, None]
        wB = B * omega[:, None, None]
        HAA = np.einsum("mki,mkj->mij", A, wA)
        HAB = np.einsum("mki,mkj->mij", A, wB)
        HBB = np.einsum("mki,mkj->mij", B, wB)
        bA = np.einsum("mki,mk->mi", wA, res)
        bB = np.einsum("mki,mk->mi", wB, res)

        for block, rows, cols in (
            (HAA, self.ii, self.ii),
            (HAB, self.ii, self.jj),
            (HAB.transpose(0, 2, 1), self.jj, self.ii),
            (HBB, self.jj, self.jj),
        ):
            r = (3 * rows)[:, None, None] + np.arange(3)[None, :, None]
            c = (3 * cols)[:, None, None] + np.arange(3)[None, None, :]
            np.add.at(H, (r, c), block)
        r = (3 * self.ii)[:, None] + np.arange(3)[None, :]
        np.add.at(b, r, bA)
        r = (3 * self.jj)[:, None] + np.arange(3)[None, :]
        np.add.at(b, r, bB)
        return H, b


def _optimize_component(
    problem: _ComponentProblem,
    max_outer_iterations: int,
) -> tuple[np.ndarray, list[float]]:
    x = problem.x.copy()
    history = [problem.objective(x)]
    if problem.n_edges == 0 or len(problem.keys) < 2:
        return x, history

    n = len(problem.keys)
    free = np.ones(3 * n, dtype=bool)
    free[0:3] = False  # the first node is the gauge and stays put
    lam = 1e-6
    for _ in range(max_outer_iterations):
        H, b = problem.build_normal_equations(x)
        H_red = H[np.ix_(free, free)]
        b_red = b[free]
        if float(np.max(np.abs(b_red), initial=0.0)) < 1e-14:
            break
        accepted = False
        for _attempt in range(10):
            damped = H_red + lam * np.diag(np.maximum(np.diagonal(H_red), 1e-12))
            try:
                delta_red = np.linalg.solve(damped, -b_red)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            candidate = x.copy()
            flat = candidate.reshape(-1)
            flat[free] += delta_red
            candidate[:, 2] = _wrap_angles(candidate[:, 2])
            obj = problem.objective(candidate)
            if obj <= history[-1]:
                x = candidate
                history.append(obj)
                lam = max(lam / 3.0, 1e-9)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        assert history[-1] <= history[-2] + 1e-12, "objective increased"
        if history[-2] - history[-1] <= 1e-14 * (1.0 + history[-2]):
            break
        if float(np.max(np.abs(delta_red))) < 1e-12:
            break
    return x, history


def optimize_pose_graph(
    graph: PoseGraph,
    *,
    max_outer_iterations: int = DEFAULT_MAX_OUTER_ITERATIONS,
    robust_kernel_scale: float = DEFAULT_ROBUST_KERNEL_SCALE,
    return_stats: bool = False,
):
    """Optimize node poses; returns {key: Pose2} (plus stats if asked).

    Disconnected graphs are solved one component at a time, each with its
    own first node pinned as the gauge, so agents that never matched stay in
    their own odometry frames.
    """
    if max_outer_iterations < 1:
        raise ValueError("max_outer_iterations must be at least 1")
    if robust_kernel_scale <= 0.0:
        raise ValueError("robust kernel scale must be positive")
    for edge in graph.edges:
        if edge.a not in graph.nodes or edge.b not in graph.nodes:
            raise ValueError(f"edge {edge.a}-{edge.b} references a missing node")
        if edge.weight <= 0.0:
            raise ValueError("edge weights must be positive")

    components = _connected_components(graph)
    if len(components) > 1:
        log.warning("pose graph has %d disconnected components", len(components))
    result: dict[NodeKey, Pose2] = {}
    stats = OptimizeStats()
    for keys in components:
        problem = _ComponentProblem(keys, graph, robust_kernel_scale)
        solution, history = _optimize_component(problem, max_outer_iterations)
        stats.objective_histories.append(history)
        for key, row in zip(keys, solution):
            result[key] = Pose2(float(row[0]), float(row[1]), float(row[2]))
    if return_stats:
        return result, stats
    return result


def merge_maps(
    optimized: Mapping[NodeKey, Pose2],
    keyframes: Sequence[Keyframe],
    *,
    voxel_size_m: float = 0.0,
) -> PointCloud2:
    """Project every keyframe scan through its optimized pose and concatenate.

    With voxel_size_m > 0 the cloud is thinned to one point per grid cell,
    keeping the first point seen in deterministic keyframe order.
    """
    if voxel_size_m < 0.0:
        raise ValueError("voxel size must be non-negative")
    parts = []
    for kf in sorted(keyframes, key=lambda k: k.key):
        pose = optimized.get(kf.key)
        if pose is None or kf.scan.is_empty:
            continue
        parts.append(transform_points(pose, kf.scan.points))
    if not parts:
        return PointCloud2(np.zeros((0, 2)), frame_id="merged")
    points = np.concatenate(parts, axis=0)
    if voxel_size_m > 0.0:
        cells = np.floor(points / voxel_size_m).astype(np.int64)
        _, first_idx = np.unique(cells, axis=0, return_index=True)
        points = points[np.sort(first_idx)]
    return PointCloud2(points, frame_id="merged")
