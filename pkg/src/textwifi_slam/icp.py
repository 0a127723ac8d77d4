"""Rigid 2D scan registration.

svd_rigid_fit solves the closed-form least-squares alignment of matched
point pairs; icp_register wraps it in the usual iterate-correspond loop with
a nearest-neighbour search bounded by a correspondence radius.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Pose2, PointCloud2, compose, transform_points

log = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 50
DEFAULT_CORRESPONDENCE_RADIUS_M = 1.0
DEFAULT_TOLERANCE = 1e-5


@dataclass(frozen=True)
class IcpResult:
    """Outcome of one registration attempt.

    transform maps source-frame points into the target frame. mean_sq_error
    is over the final inlier correspondences (inf when there were none), and
    inlier_fraction is the share of source points that found a neighbour
    within the correspondence radius on the last pass.
    """

    transform: Pose2
    mean_sq_error: float
    iterations: int
    converged: bool
    inlier_fraction: float


def svd_rigid_fit(source: np.ndarray, target: np.ndarray) -> Pose2:
    """Least-squares rigid transform sending source points onto target points.

    Kabsch in 2D: SVD of the centered cross-covariance with a determinant
    correction so the result is a proper rotation, never a reflection.
    """
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    if src.shape != tgt.shape or src.ndim != 2 or src.shape[1] != 2:
        raise ValueError("source and target must be matching (n, 2) arrays")
    if src.shape[0] < 2:
        raise ValueError("need at least two point pairs for a rigid fit")
    src_mean = src.mean(axis=0)
    tgt_mean = tgt.mean(axis=0)
    src_c = src - src_mean
    tgt_c = tgt - tgt_mean
    if float(np.max(np.abs(src_c))) < 1e-12:
        raise ValueError("source points are coincident, rotation is unobservable")
    cov = src_c.T @ tgt_c
    u, _, vt = np.linalg.svd(cov)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, d]) @ u.T
    theta = math.atan2(rot[1, 0], rot[0, 0])
    tx, ty = tgt_mean - rot @ src_mean
    return Pose2(float(tx), float(ty), theta)


def icp_register(
    source: PointCloud2,
    target: PointCloud2,
    initial: Pose2 = Pose2.identity(),
    *,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    correspondence_radius_m: float = DEFAULT_CORRESPONDENCE_RADIUS_M,
    tolerance: float = DEFAULT_TOLERANCE,
) -> IcpResult:
    """Iterative closest point from an initial guess.

    Each pass matches every transformed source point to its nearest target
    point within the radius, refits, and composes the correction. Stops when
    the pose update falls below tolerance (converged) or at the iteration
    cap. Losing all correspondences aborts with converged=False.
    """
    if len(source) < 3 or len(target) < 3:
        raise ValueError("registration needs at least 3 points in each cloud")
    if max_iterations < 1:
        raise ValueError("max_iterations must be at least 1")
    if correspondence_radius_m <= 0.0 or tolerance <= 0.0:
        raise ValueError("correspondence radius and tolerance must be positive")

    tree = cKDTree(target.points)
    pose = initial
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        moved = transform_points(pose, source.points)
        dist, idx = tree.query(moved, distance_upper_bound=correspondence_radius_m)
        mask = np.isfinite(dist)
        if int(mask.sum()) < 3:
            log.debug(
                "ICP lost correspondences at iteration %d (%d within %.2f m)",
                iterations, int(mask.sum()), correspondence_radius_m,
            )
            return IcpResult(pose, math.inf, iterations, False, float(mask.mean()))
        delta = svd_rigid_fit(moved[mask], target.points[idx[mask]])
        pose = compose(delta, pose)
        step = math.hypot(delta.x, delta.y) + abs(delta.theta)
        if step < tolerance:
            converged = True
            break

    moved = transform_points(pose, source.points)
    dist, idx = tree.query(moved, distance_upper_bound=correspondence_radius_m)
    mask = np.isfinite(dist)
    if int(mask.sum()) == 0:
        return IcpResult(pose, math.inf, iterations, False, 0.0)
    mse = float(np.mean(dist[mask] ** 2))
    return IcpResult(pose, mse, iterations, converged, float(mask.mean()))


def icp_register_multistart(
    source: PointCloud2,
    target: PointCloud2,
    initials: Sequence[Pose2],
    **kwargs,
) -> IcpResult:
    """Run icp_register from several initial guesses and keep the best.

    Converged results beat non-converged ones; ties break on mean squared
    error and then on the order of the initial guesses, so the outcome is
    deterministic.
    """
    if not initials:
        raise ValueError("need at least one initial guess")
    best: IcpResult | None = None
    for initial in initials:
        result = icp_register(source, target, initial, **kwargs)
        if best is None or (result.converged, -result.mean_sq_error) > (
            best.converged,
            -best.mean_sq_error,
        ):
            best = result
    assert best is not None
    return best
