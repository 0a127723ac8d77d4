"""Deterministic sensor simulation along scripted routes.

Each agent follows its waypoint list at constant speed, pausing for the
per-waypoint hold time. Every sensor channel (odometry, lidar-style range
scans, WiFi sweeps, text detections) is driven by a single seeded generator
in a fixed per-tick order, so a recording is a pure function of the plan,
the script and the seed.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .geometry import Pose2, PointCloud2, compose, relative_pose
from .text_matching import TextObservation, corrupt_text
from .wifi import WifiScan, predicted_rss
from .world import FloorPlan, count_wall_crossings, raycast

TICK_S = 0.1
SCAN_RAY_COUNT = 360
SCAN_RESOLUTION_RAD = math.radians(1.0)
SCAN_MAX_RANGE_M = 15.0


@dataclass(frozen=True)
class NoiseModel:
    """Noise magnitudes for one agent.

    Odometry translation noise scales with the distance moved per step,
    rotation noise with the turn magnitude; heading_drift_rad_per_m is a
    constant bias that accumulates with travelled distance and is the main
    source of endpoint error over long runs.
    """

    odom_sigma_trans_per_m: float = 0.01
    odom_sigma_rot_per_rad: float = 0.02
    heading_drift_rad_per_m: float = 0.0
    scan_sigma_m: float = 0.01
    wifi_sigma_db: float = 1.5
    ocr_p_sub: float = 0.02
    ocr_p_del: float = 0.005
    ocr_p_ins: float = 0.005

    @staticmethod
    def zero() -> "NoiseModel":
        return NoiseModel(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class AgentScript:
    """Route and sensor configuration for one simulated agent."""

    agent_id: str
    waypoints: tuple[tuple[tuple[float, float], float], ...]  # ((x, y), hold_s)
    speed_mps: float = 1.0
    scan_hz: float = 1.0
    wifi_hz: float = 2.0
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 0
    text_detection_range_m: float = 3.0
    text_detection_half_angle_rad: float = math.radians(60.0)
    text_detection_prob: float = 0.9
    text_attempt_cooldown_s: float = 2.0
    wifi_sensitivity_dbm: float = -75.0

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError("a script needs at least one waypoint")
        if self.speed_mps <= 0.0:
            raise ValueError("speed must be positive")
        for hz in (self.scan_hz, self.wifi_hz):
            if hz <= 0.0 or hz * TICK_S > 1.0 + 1e-9:
                raise ValueError(f"sensor rate {hz} Hz does not fit the {TICK_S}s tick")
        if not 0.0 <= self.text_detection_prob <= 1.0:
            raise ValueError("detection probability must be in [0, 1]")

    def path_length_m(self) -> float:
        total = 0.0
        for (a, _), (b, _) in zip(self.waypoints, self.waypoints[1:]):
            total += math.hypot(b[0] - a[0], b[1] - a[1])
        return total


@dataclass(frozen=True)
class OdometryStep:
    """Noisy relative motion over one tick, in the previous body frame."""

    timestamp: float
    dx: float
    dy: float
    dtheta: float


@dataclass(frozen=True)
class ScanEvent:
    timestamp: float
    cloud: PointCloud2  # sensor frame


@dataclass(frozen=True)
class TruthSample:
    timestamp: float
    pose: Pose2


@dataclass
class Recording:
    """Everything one agent sensed, plus ground truth for evaluation.

    The odometry channel carries relative steps only; consumers integrate
    them from the agent's known start pose (the first truth sample), which
    models externally initialized agents sharing one world frame.
    """

    agent_id: str
    odometry: list[OdometryStep] = field(default_factory=list)
    scans: list[ScanEvent] = field(default_factory=list)
    texts: list[TextObservation] = field(default_factory=list)
    wifi: list[WifiScan] = field(default_factory=list)
    truth: list[TruthSample] = field(default_factory=list)

    def truth_at(self, timestamp: float) -> Pose2:
        """Ground-truth pose at the truth sample nearest to timestamp."""
        if not self.truth:
            raise ValueError("recording has no truth samples")
        times = [s.timestamp for s in self.truth]
        i = bisect_right(times, timestamp)
        if i == 0:
            return self.truth[0].pose
        if i == len(times):
            return self.truth[-1].pose
        before, after = self.truth[i - 1], self.truth[i]
        if timestamp - before.timestamp <= after.timestamp - timestamp:
            return before.pose
        return after.pose

    def travel_distance_m(self) -> float:
        total = 0.0
        for a, b in zip(self.truth, self.truth[1:]):
            total += math.hypot(b.pose.x - a.pose.x, b.pose.y - a.pose.y)
        return total


@dataclass(frozen=True)
class _Phase:
    t_start: float
    t_end: float
    start: tuple[float, float]
    end: tuple[float, float]
    heading: float
    moving: bool


def _build_phases(script: AgentScript) -> list[_Phase]:
    phases: list[_Phase] = []
    t = 0.0
    heading = 0.0
    # Initial heading points at the first waypoint that is somewhere else.
    here = script.waypoints[0][0]
    for pos, _ in script.waypoints[1:]:
        if pos != here:
            heading = math.atan2(pos[1] - here[1], pos[0] - here[0])
            break
    for i, (pos, hold) in enumerate(script.waypoints):
        if hold < 0.0:
            raise ValueError("hold times must be non-negative")
        if hold > 0.0:
            phases.append(_Phase(t, t + hold, pos, pos, heading, False))
            t += hold
        if i + 1 < len(script.waypoints):
            nxt = script.waypoints[i + 1][0]
            dist = math.hypot(nxt[0] - pos[0], nxt[1] - pos[1])
            if dist > 0.0:
                heading = math.atan2(nxt[1] - pos[1], nxt[0] - pos[0])
                duration = dist / script.speed_mps
                phases.append(_Phase(t, t + duration, pos, nxt, heading, True))
                t += duration
    if not phases:
        phases.append(_Phase(0.0, 0.0, here, here, heading, False))
    return phases


def _pose_in_phase(phase: _Phase, t: float, speed: float) -> Pose2:
    if not phase.moving:
        return Pose2(phase.start[0], phase.start[1], phase.heading)
    travelled = (t - phase.t_start) * speed
    c, s = math.cos(phase.heading), math.sin(phase.heading)
    return Pose2(phase.start[0] + c * travelled, phase.start[1] + s * travelled, phase.heading)


def simulate_recording(plan: FloorPlan, script: AgentScript) -> Recording:
    """Run one agent through the plan and record every sensor channel."""
    xmin, ymin, xmax, ymax = plan.bounds()
    for pos, _ in script.waypoints:
        if not (xmin <= pos[0] <= xmax and ymin <= pos[1] <= ymax):
            raise ValueError(f"waypoint {pos} lies outside the floorplan")

    rng = np.random.default_rng(script.seed)
    phases = _build_phases(script)
    total_time = phases[-1].t_end
    n_ticks = max(1, math.ceil(total_time / TICK_S - 1e-9))
    scan_every = max(1, round(1.0 / (script.scan_hz * TICK_S)))
    wifi_every = max(1, round(1.0 / (script.wifi_hz * TICK_S)))

    noise = script.noise
    rec = Recording(agent_id=script.agent_id)
    local_angles = np.arange(SCAN_RAY_COUNT) * SCAN_RESOLUTION_RAD
    cos_half = math.cos(script.text_detection_half_angle_rad)
    last_attempt: dict[str, float] = {}

    phase_idx = 0
    prev_pose: Optional[Pose2] = None
    for k in range(n_ticks + 1):
        t = k * TICK_S
        clamped = min(t, total_time)
        while phase_idx + 1 < len(phases) and clamped > phases[phase_idx].t_end + 1e-12:
            phase_idx += 1
        pose = _pose_in_phase(phases[phase_idx], clamped, script.speed_mps)
        rec.truth.append(TruthSample(t, pose))

        if prev_pose is not None:
            step = relative_pose(prev_pose, pose)
            dist = math.hypot(step.x, step.y)
            dx = step.x + float(rng.standard_normal()) * noise.odom_sigma_trans_per_m * dist
            dy = step.y + float(rng.standard_normal()) * noise.odom_sigma_trans_per_m * dist
            dtheta = (
                step.theta
                + float(rng.standard_normal()) * noise.odom_sigma_rot_per_rad * abs(step.theta)
                + noise.heading_drift_rad_per_m * dist
            )
            rec.odometry.append(OdometryStep(t, dx, dy, dtheta))
        prev_pose = pose

        if k % scan_every == 0:
            world_angles = pose.theta + local_angles
            ranges = raycast((pose.x, pose.y), world_angles, plan.walls, SCAN_MAX_RANGE_M)
            hit = np.isfinite(ranges)
            n_hit = int(hit.sum())
            noisy = ranges[hit] + rng.standard_normal(n_hit) * noise.scan_sigma_m
            pts = np.stack(
                [noisy * np.cos(local_angles[hit]), noisy * np.sin(local_angles[hit])],
                axis=1,
            )
            rec.scans.append(ScanEvent(t, PointCloud2(pts, frame_id=script.agent_id)))

        if k % wifi_every == 0:
            readings = []
            for ap in plan.aps:
                walls_crossed = count_wall_crossings(ap.position, (pose.x, pose.y), plan.walls)
                sigma = math.hypot(ap.noise_sigma_db, noise.wifi_sigma_db)
                rss = predicted_rss(ap, (pose.x, pose.y), walls_crossed)
                rss += float(rng.standard_normal()) * sigma
                if rss >= script.wifi_sensitivity_dbm:
                    readings.append((ap.mac, rss))
            rec.wifi.append(WifiScan(t, script.agent_id, tuple(readings)))

        for sign in plan.signs:
            ddx = pose.x - sign.position[0]
            ddy = pose.y - sign.position[1]
            dist = math.hypot(ddx, ddy)
            if dist > script.text_detection_range_m:
                continue
            if dist > 1e-9:
                facing = (math.cos(sign.facing_rad), math.sin(sign.facing_rad))
                if (facing[0] * ddx + facing[1] * ddy) / dist < cos_half:
                    continue
            prev = last_attempt.get(sign.sign_id)
            if prev is not None and t - prev < script.text_attempt_cooldown_s - 1e-9:
                continue
            last_attempt[sign.sign_id] = t
            if float(rng.random()) < script.text_detection_prob:
                text = corrupt_text(
                    sign.text, noise.ocr_p_sub, noise.ocr_p_del, noise.ocr_p_ins, rng
                )
                if text:
                    rec.texts.append(
                        TextObservation(t, script.agent_id, text, sign.sign_id)
                    )
    return rec


def integrate_odometry(recording: Recording) -> list[tuple[float, Pose2]]:
    """Dead-reckoned trajectory from the odometry channel.

    Starts from the agent's known initial pose (the first truth sample) and
    composes the noisy steps; this is the drifting estimate the back end has
    to correct.
    """
    if not recording.truth:
        raise ValueError("recording has no truth samples to anchor the start pose")
    pose = recording.truth[0].pose
    out = [(recording.truth[0].timestamp, pose)]
    for step in recording.odometry:
        pose = compose(pose, Pose2(step.dx, step.dy, step.dtheta))
        out.append((step.timestamp, pose))
    return out
