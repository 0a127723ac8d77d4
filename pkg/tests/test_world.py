"""Floorplan generation, raycasting, and wall-crossing counts."""

import math

import numpy as np
import pytest

from textwifi_slam.wifi import AccessPoint
from textwifi_slam.world import (
    CorridorTemplate,
    FloorPlan,
    Sign,
    count_wall_crossings,
    generate_floorplan,
    raycast,
)

SQUARE = (
    ((0.0, 0.0), (4.0, 0.0)),
    ((4.0, 0.0), (4.0, 4.0)),
    ((4.0, 4.0), (0.0, 4.0)),
    ((0.0, 4.0), (0.0, 0.0)),
)


def test_raycast_hits_square_walls_at_exact_ranges():
    angles = np.array([0.0, math.pi / 2.0, math.pi, -math.pi / 2.0, math.pi / 4.0])
    hits = raycast((2.0, 2.0), angles, SQUARE, 100.0)
    assert hits[:4] == pytest.approx([2.0, 2.0, 2.0, 2.0], abs=1e-12)
    assert hits[4] == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)


def test_raycast_respects_max_range():
    hits = raycast((2.0, 2.0), np.array([0.0]), SQUARE, 1.5)
    assert np.isinf(hits[0])


def test_raycast_miss_is_inf():
    one_wall = (((0.0, 0.0), (1.0, 0.0)),)
    hits = raycast((0.5, 1.0), np.array([0.0, -math.pi / 2.0]), one_wall, 10.0)
    assert np.isinf(hits[0])
    assert hits[1] == pytest.approx(1.0, abs=1e-12)


def test_wall_crossing_counts():
    assert count_wall_crossings((2.0, 2.0), (3.0, 3.0), SQUARE) == 0
    assert count_wall_crossings((2.0, 2.0), (6.0, 2.0), SQUARE) == 1
    assert count_wall_crossings((-1.0, 2.0), (6.0, 2.0), SQUARE) == 2


def test_template_derived_dimensions():
    t = CorridorTemplate(room_count=4, room_width_m=6.0, room_depth_m=5.0, corridor_width_m=3.0)
    assert t.length_m == 24.0
    assert t.height_m == 8.0
    assert t.room_center_x(0) == 3.0
    assert t.room_center_x(3) == 21.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(room_count=0),
        dict(corridor_width_m=0.0),
        dict(door_width_m=6.0, room_width_m=6.0),
        dict(room_width_m=1.5),
    ],
)
def test_template_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        CorridorTemplate(**kwargs)


@pytest.fixture(scope="module")
def plan() -> FloorPlan:
    return generate_floorplan(CorridorTemplate(), 3, 8, seed=0)


def test_floorplan_bounds_match_template(plan):
    assert plan.bounds() == (0.0, 0.0, 24.0, 8.0)


def test_floorplan_has_one_unique_label_per_room(plan):
    room_texts = [s.text for s in plan.signs if s.sign_id.startswith("s_room")]
    assert len(room_texts) == 4
    assert len(set(room_texts)) == 4


def test_duplicated_texts_appear_exactly_twice(plan):
    dup_signs = [s for s in plan.signs if s.sign_id.startswith("s_dup")]
    assert len(dup_signs) == 6
    by_text: dict = {}
    for s in dup_signs:
        by_text.setdefault(s.text, []).append(s)
    assert all(len(group) == 2 for group in by_text.values())
    # The two instances of one text sit at clearly different places.
    for group in by_text.values():
        (xa, ya), (xb, yb) = group[0].position, group[1].position
        assert math.hypot(xa - xb, ya - yb) > 3.0
    # No duplicated text collides with a room label.
    room_texts = {s.text for s in plan.signs if s.sign_id.startswith("s_room")}
    assert room_texts.isdisjoint(by_text)


def test_requested_ap_count_and_unique_macs(plan):
    assert len(plan.aps) == 8
    assert len({ap.mac for ap in plan.aps}) == 8


def test_generation_is_deterministic():
    a = generate_floorplan(CorridorTemplate(), 2, 6, seed=9)
    b = generate_floorplan(CorridorTemplate(), 2, 6, seed=9)
    c = generate_floorplan(CorridorTemplate(), 2, 6, seed=10)
    assert a == b
    assert a != c


def test_zero_duplicates_is_allowed():
    plan = generate_floorplan(CorridorTemplate(), 0, 4, seed=1)
    assert not [s for s in plan.signs if s.sign_id.startswith("s_dup")]


def test_generator_input_validation():
    with pytest.raises(ValueError):
        generate_floorplan(CorridorTemplate(), -1, 4, seed=0)
    with pytest.raises(ValueError):
        generate_floorplan(CorridorTemplate(), 99, 4, seed=0)
    with pytest.raises(ValueError):
        generate_floorplan(CorridorTemplate(), 0, 0, seed=0)


def test_named_anchor_lookup(plan):
    assert plan.anchor("west_end") == (1.5, 1.5)
    with pytest.raises(KeyError):
        plan.anchor("nowhere")


def test_floorplan_rejects_inconsistent_contents():
    wall = (((0.0, 0.0), (4.0, 0.0)),)
    sign = Sign("s1", "T", (1.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        FloorPlan((), (), ())
    with pytest.raises(ValueError):
        FloorPlan(wall, (sign, sign), ())
    with pytest.raises(ValueError):
        FloorPlan(wall, (Sign("s2", "T", (9.0, 0.0), 0.0),), ())
    dup_mac = AccessPoint(mac="m", position=(1.0, 0.0))
    with pytest.raises(ValueError):
        FloorPlan(wall, (), (dup_mac, dup_mac))
