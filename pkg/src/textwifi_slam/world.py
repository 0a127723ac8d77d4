"""Synthetic indoor worlds.

A floorplan is a set of wall segments plus the things agents can sense:
text signs and WiFi access points. The generator builds corridor-and-rooms
layouts with controlled text duplication, and scripted_scenario bundles a
plan with agent routes for the named benchmark scenes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .wifi import AccessPoint

Point = tuple[float, float]
Wall = tuple[Point, Point]

# Texts that appear at more than one physical location. Duplication is the
# whole point: identical strings in different places are what break a
# text-only matcher.
DUPLICATE_TEXT_POOL = (
    "FIRE EXTINGUISHER",
    "EMERGENCY EXIT",
    "KEEP CLEAR",
    "ASSEMBLY POINT",
    "WET FLOOR CAUTION",
)

ENTRANCE_TEXT = "ENTRANCE LOBBY"


@dataclass(frozen=True)
class Sign:
    """A piece of readable text mounted at a fixed position.

    facing_rad points away from the mounting surface; an agent can only read
    the sign from inside a cone around that direction.
    """

    sign_id: str
    text: str
    position: Point
    facing_rad: float


@dataclass(frozen=True)
class FloorPlan:
    walls: tuple[Wall, ...]
    signs: tuple[Sign, ...]
    aps: tuple[AccessPoint, ...]
    named_anchors: tuple[tuple[str, Point], ...] = ()

    def __post_init__(self) -> None:
        if not self.walls:
            raise ValueError("a floorplan needs at least one wall")
        sign_ids = [s.sign_id for s in self.signs]
        if len(sign_ids) != len(set(sign_ids)):
            raise ValueError("sign ids must be unique")
        macs = [ap.mac for ap in self.aps]
        if len(macs) != len(set(macs)):
            raise ValueError("access point MACs must be unique")
        xmin, ymin, xmax, ymax = self.bounds()
        for sign in self.signs:
            x, y = sign.position
            if not (xmin <= x <= xmax and ymin <= y <= ymax):
                raise ValueError(f"sign {sign.sign_id} lies outside the walls")

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [x for wall in self.walls for x, _ in wall]
        ys = [y for wall in self.walls for _, y in wall]
        return min(xs), min(ys), max(xs), max(ys)

    def anchor(self, label: str) -> Point:
        for name, position in self.named_anchors:
            if name == label:
                return position
        raise KeyError(f"no anchor named {label!r}")


def _wall_arrays(walls: tuple[Wall, ...]) -> tuple[np.ndarray, np.ndarray]:
    starts = np.array([w[0] for w in walls], dtype=float)
    ends = np.array([w[1] for w in walls], dtype=float)
    return starts, ends


def raycast(
    origin: Point,
    angles_rad: np.ndarray,
    walls: tuple[Wall, ...],
    max_range_m: float,
) -> np.ndarray:
    """First-hit distances from origin along each angle, inf for misses.

    Vectorized ray/segment intersection over all (ray, wall) pairs.
    """
    starts, ends = _wall_arrays(walls)
    seg = ends - starts                      # (w, 2)
    rel = starts - np.asarray(origin, float)  # (w, 2)
    d = np.stack([np.cos(angles_rad), np.sin(angles_rad)], axis=1)  # (a, 2)

    denom = d[:, 0:1] * seg[None, :, 1] - d[:, 1:2] * seg[None, :, 0]  # (a, w)
    rel_cross_seg = rel[:, 0] * seg[:, 1] - rel[:, 1] * seg[:, 0]      # (w,)
    rel_cross_d = rel[None, :, 0] * d[:, 1:2] - rel[None, :, 1] * d[:, 0:1]  # (a, w)

    with np.errstate(divide="ignore", invalid="ignore"):
        t = rel_cross_seg[None, :] / denom
        u = rel_cross_d / denom
    valid = (np.abs(denom) > 1e-12) & (t > 1e-9) & (u >= -1e-12) & (u <= 1.0 + 1e-12)
    t = np.where(valid, t, np.inf)
    hits = t.min(axis=1)
    return np.where(hits <= max_range_m, hits, np.inf)


def count_wall_crossings(a: Point, b: Point, walls: tuple[Wall, ...]) -> int:
    """Number of walls the open segment from a to b passes through."""
    starts, ends = _wall_arrays(walls)
    pa = np.asarray(a, float)
    pb = np.asarray(b, float)
    ab = pb - pa

    def cross(v: np.ndarray, w: np.ndarray) -> np.ndarray:
        return v[..., 0] * w[..., 1] - v[..., 1] * w[..., 0]

    d1 = cross(ab, starts - pa)
    d2 = cross(ab, ends - pa)
    seg = ends - starts
    d3 = cross(seg, pa - starts)
    d4 = cross(seg, pb - starts)
    crossing = (d1 * d2 < 0.0) & (d3 * d4 < 0.0)
    return int(np.count_nonzero(crossing))


@dataclass(frozen=True)
class CorridorTemplate:
    """Parameters of the corridor-and-rooms layout.

    Rooms sit in a row along the north side of a straight corridor, each
    with a doorway onto it.
    """

    room_count: int = 4
    room_width_m: float = 6.0
    room_depth_m: float = 5.0
    corridor_width_m: float = 3.0
    door_width_m: float = 1.2
    ap_transmit_power_dbm: float = 20.0
    ap_constant_k_db: float = 40.0
    ap_path_loss_exponent: float = 3.0
    ap_noise_sigma_db: float = 0.0
    wall_attenuation_db: float = 10.0

    def __post_init__(self) -> None:
        if self.room_count < 1:
            raise ValueError("need at least one room")
        for name in ("room_width_m", "room_depth_m", "corridor_width_m", "door_width_m"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.door_width_m >= self.room_width_m:
            raise ValueError("doors cannot be wider than the room")
        if self.room_width_m < 2.0 or self.room_depth_m < 2.0:
            raise ValueError("rooms are too small to mount signs in")

    @property
    def length_m(self) -> float:
        return self.room_count * self.room_width_m

    @property
    def height_m(self) -> float:
        return self.corridor_width_m + self.room_depth_m

    def room_center_x(self, i: int) -> float:
        return (i + 0.5) * self.room_width_m


def _corridor_walls(t: CorridorTemplate) -> list[Wall]:
    length, height, cw = t.length_m, t.height_m, t.corridor_width_m
    walls: list[Wall] = [
        ((0.0, 0.0), (length, 0.0)),
        ((length, 0.0), (length, height)),
        ((length, height), (0.0, height)),
        ((0.0, height), (0.0, 0.0)),
    ]
    # Corridor/room divider with a door gap per room.
    for i in range(t.room_count):
        left = i * t.room_width_m
        right = left + t.room_width_m
        cx = t.room_center_x(i)
        gap_l = cx - t.door_width_m / 2.0
        gap_r = cx + t.door_width_m / 2.0
        walls.append(((left, cw), (gap_l, cw)))
        walls.append(((gap_r, cw), (right, cw)))
    # Partitions between adjacent rooms.
    for i in range(1, t.room_count):
        x = i * t.room_width_m
        walls.append(((x, cw), (x, height)))
    return walls


def generate_floorplan(
    template: CorridorTemplate,
    duplicate_text_count: int,
    ap_count: int,
    seed: int,
) -> FloorPlan:
    """Build a corridor-and-rooms floorplan with controlled text duplication.

    duplicate_text_count texts are each mounted at two distinct locations
    (alternating between far-apart rooms and corridor walls); every room also
    gets a unique label sign by its door. APs are spread so that different
    rooms see distinguishably different subsets.
    """
    if duplicate_text_count < 0 or duplicate_text_count > len(DUPLICATE_TEXT_POOL):
        raise ValueError(
            f"duplicate_text_count must be in [0, {len(DUPLICATE_TEXT_POOL)}]"
        )
    if ap_count < 1:
        raise ValueError("need at least one access point")
    rng = np.random.default_rng(seed)
    t = template
    cw, height, length = t.corridor_width_m, t.height_m, t.length_m
    inset = 0.08  # signs sit just inside the wall line

    signs: list[Sign] = [
        Sign("s_entrance", ENTRANCE_TEXT, (inset, cw / 2.0), 0.0),
    ]
    # Room labels on the corridor wall, east of each door, facing the corridor.
    for i in range(t.room_count):
        door_east = t.room_center_x(i) + t.door_width_m / 2.0
        x = min(door_east + 0.4, (i + 1) * t.room_width_m - 0.3)
        signs.append(
            Sign(f"s_room{i}", f"ROOM A-{101 + i}", (x, cw - inset), -math.pi / 2.0)
        )
    # Duplicated texts, two instances each.
    for j in range(duplicate_text_count):
        text = DUPLICATE_TEXT_POOL[j]
        if j % 2 == 0:
            # Inside two non-adjacent rooms, on the north wall.
            ra = (j // 2) % t.room_count
            rb = (ra + 2) % t.room_count
            for k, room in enumerate((ra, rb)):
                x = t.room_center_x(room) + float(rng.uniform(-0.5, 0.5))
                signs.append(
                    Sign(f"s_dup{j}_{k}", text, (x, height - inset), -math.pi / 2.0)
                )
        else:
            # On the corridor south wall, far apart.
            for k, frac in enumerate((0.3, 0.75)):
                x = length * frac + float(rng.uniform(-0.5, 0.5))
                signs.append(Sign(f"s_dup{j}_{k}", text, (x, inset), math.pi / 2.0))

    # Access points: one per room first, then along the corridor, then a
    # second round in the rooms near the doorway side.
    positions: list[Point] = []
    for i in range(t.room_count):
        positions.append((t.room_center_x(i), cw + t.room_depth_m * 0.75))
    # Corridor units hang high on the divider wall rather than mid-corridor:
    # an agent walking the centerline never gets into the near field where a
    # half-meter of travel swings the reading by tens of dB.
    n_corridor = max(2, (ap_count - t.room_count + 1) // 2)
    for i in range(n_corridor):
        positions.append((length * (i + 1) / (n_corridor + 1), cw - 0.35))
    i = 0
    while len(positions) < ap_count:
        positions.append(
            (t.room_center_x(i % t.room_count) - t.room_width_m * 0.25,
             cw + t.room_depth_m * 0.25)
        )
        i += 1
    aps = tuple(
        AccessPoint(
            mac=f"ap{i:02d}",
            position=(
                float(px + rng.uniform(-0.25, 0.25)),
                float(py + rng.uniform(-0.25, 0.25)),
            ),
            transmit_power_dbm=t.ap_transmit_power_dbm,
            constant_k_db=t.ap_constant_k_db,
            path_loss_exponent=t.ap_path_loss_exponent,
            noise_sigma_db=t.ap_noise_sigma_db,
            wall_attenuation_db=t.wall_attenuation_db,
        )
        for i, (px, py) in enumerate(positions[:ap_count])
    )

    anchors = (
        ("west_end", (1.5, cw / 2.0)),
        ("east_end", (length - 1.5, cw / 2.0)),
    )
    return FloorPlan(tuple(_corridor_walls(t)), tuple(signs), aps, anchors)
