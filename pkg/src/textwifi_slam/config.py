"""Run configuration: defaults, per-scenario tuning, file and flag overlays.

Precedence, lowest to highest: dataclass defaults, scenario-tuned values,
config file, command-line flags. The tuned values exist because the
corridor scenes are larger and radio-noisier than the gate defaults assume;
they only touch parameters whose defaults are otherwise both documented and
sensible for unit-scale use.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Union

from .place_recognition import Thresholds

PathLike = Union[str, Path]

# Scene-specific operating points. The corridor scenes space access points
# about a room apart, so same-place fingerprints taken a couple of meters
# apart differ by 10-23 dB while different-place ones sit above 27 dB; the
# 32 dB kernel puts the gate threshold inside that gap, where the 10 dB
# default would reject most genuine revisits. Cross-agent registration
# starts from drifted odometry, hence the wider correspondence radius.
SCENARIO_TUNED: dict[str, dict] = {
    "scene01": {"sigma_scale_db": 32.0, "icp_correspondence_radius_m": 2.0},
    "scene02": {"sigma_scale_db": 32.0, "icp_correspondence_radius_m": 2.0},
}


@dataclass
class RunConfig:
    scenario: str = "scene01"
    seed: int = 0
    out_dir: str = "out"
    # Gate thresholds.
    alpha: float = 0.8
    beta: float = 0.8
    gamma: float = 0.8
    min_loop_separation_s: float = 30.0
    sigma_scale_db: float = 10.0
    fingerprint_window_s: float = 3.0
    # Scan registration.
    icp_max_iterations: int = 50
    icp_correspondence_radius_m: float = 1.0
    icp_tolerance: float = 1e-5
    # Pose-graph optimization.
    optimizer_max_iterations: int = 50
    robust_kernel_scale: float = 1.0
    # World generation and simulation.
    duplicate_text_count: int = 3
    zero_noise: bool = False
    # Outputs.
    voxel_size_m: float = 0.0
    sweep: bool = False

    def validate(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        for name in (
            "min_loop_separation_s",
            "sigma_scale_db",
            "fingerprint_window_s",
            "icp_correspondence_radius_m",
            "icp_tolerance",
            "robust_kernel_scale",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        for name in ("icp_max_iterations", "optimizer_max_iterations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.duplicate_text_count < 0:
            raise ValueError("duplicate_text_count must be non-negative")
        if self.voxel_size_m < 0.0:
            raise ValueError("voxel_size_m must be non-negative")

    def thresholds(self) -> Thresholds:
        return Thresholds(
            alpha=self.alpha,
            beta=self.beta,
            gamma=self.gamma,
            min_loop_separation_s=self.min_loop_separation_s,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_NAMES = {f.name for f in dataclasses.fields(RunConfig)}


def load_config_file(path: PathLike) -> dict:
    """Read a config document and reject keys we would silently ignore."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    unknown = sorted(set(data) - _FIELD_NAMES)
    if unknown:
        raise ValueError(f"{path}: unknown config keys: {', '.join(unknown)}")
    return data


def build_config(
    *,
    config_path: Optional[PathLike] = None,
    flag_overrides: Optional[Mapping] = None,
) -> RunConfig:
    """Merge defaults, scenario tuning, file values, and flags, in that order."""
    file_values = load_config_file(config_path) if config_path else {}
    flags = {k: v for k, v in dict(flag_overrides or {}).items() if v is not None}
    unknown = sorted(set(flags) - _FIELD_NAMES)
    if unknown:
        raise ValueError(f"unknown config overrides: {', '.join(unknown)}")

    merged = {f.name: f.default for f in dataclasses.fields(RunConfig)}
    scenario = flags.get("scenario", file_values.get("scenario", merged["scenario"]))
    merged.update(SCENARIO_TUNED.get(scenario, {}))
    merged.update(file_values)
    merged.update(flags)
    merged["scenario"] = scenario
    cfg = RunConfig(**merged)
    cfg.validate()
    return cfg


def config_for_scenario(name: str, **overrides) -> RunConfig:
    """Scenario defaults plus keyword overrides; the programmatic entry point."""
    return build_config(flag_overrides={"scenario": name, **overrides})
