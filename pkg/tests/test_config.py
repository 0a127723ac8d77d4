"""Configuration defaults, validation, and layering."""

import json

import pytest

from textwifi_slam.config import RunConfig, build_config, config_for_scenario, load_config_file


def test_defaults_are_self_consistent():
    cfg = RunConfig()
    cfg.validate()
    assert cfg.scenario == "scene01"
    assert (cfg.alpha, cfg.beta, cfg.gamma) == (0.8, 0.8, 0.8)
    assert cfg.sigma_scale_db == 10.0
    assert cfg.icp_correspondence_radius_m == 1.0


def test_thresholds_view_carries_the_gate_values():
    cfg = RunConfig(alpha=0.7, beta=0.75, gamma=0.9, min_loop_separation_s=12.0)
    th = cfg.thresholds()
    assert (th.alpha, th.beta, th.gamma) == (0.7, 0.75, 0.9)
    assert th.min_loop_separation_s == 12.0


@pytest.mark.parametrize(
    "field,value",
    [
        ("alpha", 1.5),
        ("beta", -0.1),
        ("seed", -1),
        ("sigma_scale_db", 0.0),
        ("icp_tolerance", -1e-9),
        ("icp_max_iterations", 0),
        ("optimizer_max_iterations", 0),
        ("duplicate_text_count", -2),
        ("voxel_size_m", -0.1),
        ("fingerprint_window_s", 0.0),
    ],
)
def test_validate_rejects_out_of_range_values(field, value):
    cfg = RunConfig(**{field: value})
    with pytest.raises(ValueError, match=field):
        cfg.validate()


def test_scenario_tuning_applies_to_known_scenes():
    cfg = config_for_scenario("scene01")
    assert cfg.sigma_scale_db == 32.0
    assert cfg.icp_correspondence_radius_m == 2.0

    plain = config_for_scenario("bench")
    assert plain.sigma_scale_db == 10.0
    assert plain.icp_correspondence_radius_m == 1.0


def test_flags_override_file_which_overrides_tuning(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"scenario": "scene02", "alpha": 0.6, "seed": 4}))

    cfg = build_config(config_path=path)
    assert cfg.scenario == "scene02"
    assert cfg.sigma_scale_db == 32.0  # tuned for the scene named by the file
    assert cfg.alpha == 0.6
    assert cfg.seed == 4

    cfg = build_config(config_path=path, flag_overrides={"alpha": 0.95, "seed": None})
    assert cfg.alpha == 0.95  # flag beats file
    assert cfg.seed == 4  # a None flag is "not given", not an override


def test_file_can_retune_a_tuned_value(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"scenario": "scene01", "sigma_scale_db": 20.0}))
    assert build_config(config_path=path).sigma_scale_db == 20.0


def test_scenario_flag_decides_which_tuning_applies(tmp_path):
    # The file names scene01, the flag overrides to an untuned scenario:
    # tuned values must not leak in from the file's scenario.
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"scenario": "scene01"}))
    cfg = build_config(config_path=path, flag_overrides={"scenario": "bench"})
    assert cfg.scenario == "bench"
    assert cfg.sigma_scale_db == 10.0


def test_unknown_keys_are_rejected(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"alhpa": 0.9}))
    with pytest.raises(ValueError, match="alhpa"):
        load_config_file(path)
    with pytest.raises(ValueError, match="no_such_knob"):
        build_config(flag_overrides={"no_such_knob": 1})


def test_config_file_must_be_an_object(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps([1, 2, 3]))
    with pytest.raises(ValueError, match="JSON object"):
        load_config_file(path)


def test_invalid_merged_config_fails_validation(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"gamma": 2.0}))
    with pytest.raises(ValueError, match="gamma"):
        build_config(config_path=path)


def test_round_trip_through_to_dict():
    cfg = config_for_scenario("scene01", seed=7, sweep=True)
    clone = RunConfig(**cfg.to_dict())
    assert clone == cfg
