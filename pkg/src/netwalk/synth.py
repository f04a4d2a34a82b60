"""Seeded synthetic corpora for end-to-end validation.

Three generators cover the pipeline: a single-scene abnormality corpus
(normal waypoint walkers plus the three abnormality styles), a pairwise
group-activity corpus (eight interaction classes, optionally with a motion
field that separates otherwise trajectory-identical classes), and crowd
optical-flow sequences (isotropic motion followed by a radial escape).

Everything is deterministic under the config seed. Waypoints sit at pixel
coordinates that keep a safe margin from patch borders for patch sizes 24,
32 and 48, so routes stay stable when the same trajectories are re-gridded
at any of those sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import SceneConfig, Trajectory, locate_patch
from .group import FlowVector
from .network import MotionField, RelativeNetworkSpec

SCENE_W = 640
SCENE_H = 480

# All abnormality-corpus tracks enter the scene here.
ENTRANCE_XY = (12.0, 468.0)

# Waypoint rows/columns with >= 12 px border margin at patch sizes 24/32/48.
_BOTTOM_Y = 468.0
_ZIGZAG_Y = 420.0
_ZIGZAG_SITES = (204.0, 276.0)


def abnormality_scene(patch_size: int = 48) -> SceneConfig:
    """Scene used by the abnormality corpus, re-griddable per patch size."""
    scene = SceneConfig(
        image_width=SCENE_W, image_height=SCENE_H, patch_size=patch_size
    )
    entrance = locate_patch(*ENTRANCE_XY, scene)
    return SceneConfig(
        image_width=SCENE_W,
        image_height=SCENE_H,
        patch_size=patch_size,
        entrance_patches=(entrance,),
    )


def group_scene(patch_size: int = 48) -> SceneConfig:
    return SceneConfig(image_width=SCENE_W, image_height=SCENE_H, patch_size=patch_size)


# ---- trajectory builders ----

def _walk_waypoints(
    track_id: int,
    waypoints: list[tuple[float, float]],
    speed: float,
    sigma: float,
    rng: np.random.Generator,
    start_frame: int = 0,
) -> Trajectory:
    """Walk a waypoint chain at constant speed with Gaussian pixel noise."""
    xs: list[float] = [waypoints[0][0]]
    ys: list[float] = [waypoints[0][1]]
    for (x0, y0), (x1, y1) in zip(waypoints, waypoints[1:]):
        span = math.hypot(x1 - x0, y1 - y0)
        steps = max(int(round(span / speed)), 1)
        for k in range(1, steps + 1):
            xs.append(x0 + (x1 - x0) * k / steps)
            ys.append(y0 + (y1 - y0) * k / steps)
    n = len(xs)
    return Trajectory(
        track_id=track_id,
        frames=np.arange(start_frame, start_frame + n, dtype=float),
        xs=np.asarray(xs) + rng.normal(0.0, sigma, n),
        ys=np.asarray(ys) + rng.normal(0.0, sigma, n),
    )


def _keyframe_track(
    track_id: int,
    keys: list[tuple[float, float, float]],
    sigma: float,
    rng: np.random.Generator,
    start_frame: int = 0,
    offset: tuple[float, float] = (0.0, 0.0),
    time_scale: float = 1.0,
) -> Trajectory:
    """Track through (frame, x, y) keyframes, linearly interpolated per frame."""
    kf = np.asarray([k[0] for k in keys]) * time_scale
    kx = np.asarray([k[1] for k in keys]) + offset[0]
    ky = np.asarray([k[2] for k in keys]) + offset[1]
    frames = np.arange(0.0, math.floor(kf[-1]) + 1.0)
    return Trajectory(
        track_id=track_id,
        frames=frames + start_frame,
        xs=np.interp(frames, kf, kx) + rng.normal(0.0, sigma, len(frames)),
        ys=np.interp(frames, kf, ky) + rng.normal(0.0, sigma, len(frames)),
    )


# ---- abnormality corpus ----

@dataclass
class AbnormalityCorpusConfig:
    seed: int
    n_normal: int = 200
    n_irregular: int = 30      # type I: cut across rarely used patches
    n_repetition: int = 30     # type II: back and forth along a normal path
    n_excursion: int = 30      # type III: end in an unusual region
    noise_sigma: float = 3.0
    speed_range: tuple[float, float] = (10.0, 16.0)
    zigzag_rate: float = 0.3   # normals that briefly wiggle off their row


# The three normal paths share the entrance and differ in length, so total
# energies of normal routes spread over a wide range.
_PATH_SHORT = [(12.0, _BOTTOM_Y), (300.0, _BOTTOM_Y)]
_PATH_MED = [(12.0, _BOTTOM_Y), (396.0, _BOTTOM_Y), (396.0, 204.0), (204.0, 204.0)]
_PATH_LONG = [(12.0, _BOTTOM_Y), (588.0, _BOTTOM_Y), (588.0, 84.0), (396.0, 84.0)]
_NORMAL_PATHS = (_PATH_SHORT, _PATH_MED, _PATH_LONG)


def _with_zigzag(
    path: list[tuple[float, float]], sites: list[float]
) -> list[tuple[float, float]]:
    """Insert brief dips off the bottom row at the given x sites."""
    out = [path[0]]
    for x in sorted(sites):
        out += [(x, _BOTTOM_Y), (x, _ZIGZAG_Y), (x, _BOTTOM_Y)]
    out += path[1:]
    return out


def gen_abnormality_corpus(
    config: AbnormalityCorpusConfig,
) -> tuple[list[Trajectory], dict[int, str]]:
    """Trajectories plus per-track labels (normal / I / II / III).

    Normals follow one of three waypoint paths from the shared entrance,
    some with zigzag wiggles off the path that iterative training must
    learn to tolerate. Type I cuts across patches no normal visits between
    normal endpoints; type II walks its (short) path back and forth, so its
    total energy stays inside the normal range while its minimum-energy
    ratio explodes; type III leaves the paths and stops in a corner region
    nobody normally enters.
    """
    rng = np.random.default_rng(config.seed)
    trajectories: list[Trajectory] = []
    labels: dict[int, str] = {}
    track = 0

    def emit(waypoints: list[tuple[float, float]], label: str) -> None:
        nonlocal track
        speed = float(rng.uniform(*config.speed_range))
        trajectories.append(
            _walk_waypoints(track, waypoints, speed, config.noise_sigma, rng)
        )
        labels[track] = label
        track += 1

    for k in range(config.n_normal):
        path = list(_NORMAL_PATHS[k % len(_NORMAL_PATHS)])
        if rng.uniform() < config.zigzag_rate:
            n_sites = int(rng.integers(1, len(_ZIGZAG_SITES) + 1))
            sites = sorted(
                rng.choice(_ZIGZAG_SITES, size=n_sites, replace=False).tolist()
            )
            path = _with_zigzag(path, sites)
        emit(path, "normal")

    for k in range(config.n_irregular):
        detour_y = (276.0, 300.0, 372.0)[k % 3]
        emit(
            [
                (12.0, _BOTTOM_Y),
                (300.0, _BOTTOM_Y),
                (300.0, detour_y),
                (396.0, detour_y),
                (396.0, 204.0),
                (204.0, 204.0),
            ],
            "I",
        )

    for k in range(config.n_repetition):
        back_x = (84.0, 108.0)[k % 2]
        end_x = (276.0, 300.0)[k % 2]
        emit(
            [
                (12.0, _BOTTOM_Y),
                (300.0, _BOTTOM_Y),
                (back_x, _BOTTOM_Y),
                (end_x, _BOTTOM_Y),
            ],
            "II",
        )

    for k in range(config.n_excursion):
        turn_y = (372.0, 300.0)[k % 2]
        end_x = (84.0, 108.0)[k % 2]
        emit(
            [
                (12.0, _BOTTOM_Y),
                (204.0, _BOTTOM_Y),
                (204.0, turn_y),
                (end_x, turn_y),
            ],
            "III",
        )
    return trajectories, labels


# ---- group corpus (eight interaction classes) ----

@dataclass
class GroupCorpusConfig:
    seed: int
    pairs_per_class: int = 50
    noise_sigma: float = 1.5
    position_jitter: float = 2.0   # per-person placement jitter, px
    pair_shift: float = 8.0        # whole-pair placement jitter, px

    relative_spec: RelativeNetworkSpec = field(default_factory=RelativeNetworkSpec)


@dataclass
class GroupPair:
    pair_id: int
    traj_a: Trajectory
    traj_b: Trajectory
    label: str


_Y = 264.0  # center of a patch row at patch size 48

# Keyframes per class: (frame, x, y) for the reference person A and for B.
# Gaps between the two stay >= 24 px away from relative-cell borders, and
# anyone who stands still does so >= 16 px from a patch border, so the ring
# profiles and scene energies survive placement jitter and pixel noise.
_GROUP_SCRIPTS: dict[str, tuple[list, list]] = {
    "meet": (
        [(0, 112, _Y), (48, 292, _Y)],
        [(0, 544, _Y), (48, 340, _Y)],
    ),
    "follow": (
        [(0, 236, _Y), (48, 596, _Y)],
        [(0, 140, _Y), (48, 500, _Y)],
    ),
    "approach": (
        [(0, 320, _Y), (48, 320, _Y)],
        [(0, 608, _Y), (48, 368, _Y)],
    ),
    "separate": (
        [(0, 296, _Y), (48, 104, _Y)],
        [(0, 344, _Y), (48, 524, _Y)],
    ),
    "leave": (
        [(0, 112, _Y), (48, 112, _Y)],
        [(0, 160, _Y), (48, 496, _Y)],
    ),
    # "together" gets its oscillating side-by-side track generated in code.
    "exchange": (
        [(0, 128, _Y), (40, 452, _Y), (80, 128, _Y)],
        [(0, 464, _Y), (40, 464, _Y), (80, 608, _Y)],
    ),
    "return": (
        [(0, 320, _Y), (80, 320, _Y)],
        [(0, 368, _Y), (40, 560, _Y), (80, 368, _Y)],
    ),
}

GROUP_CLASSES = (
    "approach", "exchange", "follow", "leave",
    "meet", "return", "separate", "together",
)


def _together_pair(
    pair_id: int,
    rng: np.random.Generator,
    config: GroupCorpusConfig,
    start_frame: int = 0,
) -> GroupPair:
    """Side-by-side walk whose lateral gap oscillates across the ring-0 border."""
    frames = np.arange(0.0, 61.0)
    shift = rng.uniform(-config.pair_shift, config.pair_shift, 2)
    ax = 96.0 + 8.0 * frames + shift[0]
    ay = 216.0 + shift[1]
    # three dips from ring 1 to ring 0 and back
    dy = 30.0 + 18.0 * np.cos(np.pi * frames / 10.0)
    a = Trajectory(
        track_id=2 * pair_id,
        frames=frames + start_frame,
        xs=ax + rng.normal(0.0, config.noise_sigma, len(frames)),
        ys=ay + rng.normal(0.0, config.noise_sigma, len(frames)),
    )
    b = Trajectory(
        track_id=2 * pair_id + 1,
        frames=frames + start_frame,
        xs=ax + rng.normal(0.0, config.noise_sigma, len(frames)),
        ys=ay + dy + rng.normal(0.0, config.noise_sigma, len(frames)),
    )
    return GroupPair(pair_id=pair_id, traj_a=a, traj_b=b, label="together")


def _scripted_pair(
    pair_id: int,
    label: str,
    rng: np.random.Generator,
    config: GroupCorpusConfig,
    start_frame: int = 0,
) -> GroupPair:
    keys_a, keys_b = _GROUP_SCRIPTS[label]
    shift = tuple(rng.uniform(-config.pair_shift, config.pair_shift, 2))
    jig = config.position_jitter
    scale = float(rng.uniform(0.9, 1.1))
    off_a = (shift[0] + rng.uniform(-jig, jig), shift[1] + rng.uniform(-jig, jig))
    off_b = (shift[0] + rng.uniform(-jig, jig), shift[1] + rng.uniform(-jig, jig))
    a = _keyframe_track(
        2 * pair_id, keys_a, config.noise_sigma, rng,
        start_frame=start_frame, offset=off_a, time_scale=scale,
    )
    b = _keyframe_track(
        2 * pair_id + 1, keys_b, config.noise_sigma, rng,
        start_frame=start_frame, offset=off_b, time_scale=scale,
    )
    return GroupPair(pair_id=pair_id, traj_a=a, traj_b=b, label=label)


def gen_group_corpus(config: GroupCorpusConfig) -> list[GroupPair]:
    """Eight-class pair corpus, ``pairs_per_class`` pairs per class."""
    rng = np.random.default_rng(config.seed)
    pairs: list[GroupPair] = []
    pair_id = 0
    for label in GROUP_CLASSES:
        for _ in range(config.pairs_per_class):
            if label == "together":
                pairs.append(_together_pair(pair_id, rng, config))
            else:
                pairs.append(_scripted_pair(pair_id, label, rng, config))
            pair_id += 1
    return pairs


# ---- group corpus with motion field (seven classes) ----

@dataclass
class MotionGroupConfig:
    seed: int
    pairs_per_class: int = 50
    noise_sigma: float = 1.5
    position_jitter: float = 2.0
    pair_shift: float = 8.0
    clip_stride: int = 1000        # frame offset between pair clips
    burst_magnitude: float = 24.0
    field_noise: float = 0.3

    relative_spec: RelativeNetworkSpec = field(default_factory=RelativeNetworkSpec)


# Seven-class scripts. "rob"/"overtake" and "fight"/"meet_gather" are
# value-twins in trajectory features and differ only through motion bursts.
_MOTION_SCRIPTS: dict[str, tuple[list, list]] = {
    "follow_case": (
        [(0, 236, _Y), (48, 596, _Y)],
        [(0, 140, _Y), (48, 500, _Y)],
    ),
    "follow_gather": (
        [(0, 188, _Y), (60, 428, _Y)],
        [(0, 92, _Y), (40, 348, _Y), (60, 428, _Y)],
    ),
    "meet_part": (
        [(0, 188, _Y), (30, 312, _Y), (60, 188, _Y)],
        [(0, 572, _Y), (30, 320, _Y), (60, 572, _Y)],
    ),
    "fight": (
        [(0, 188, _Y), (30, 312, _Y), (60, 312, _Y)],
        [(0, 572, _Y), (30, 320, _Y), (60, 320, _Y)],
    ),
    "meet_gather": (
        [(0, 188, _Y), (30, 312, _Y), (60, 312, _Y)],
        [(0, 572, _Y), (30, 320, _Y), (60, 320, _Y)],
    ),
    "rob": (
        [(0, 140, _Y), (12, 212, _Y), (70, 212, _Y)],
        [(0, 44, _Y), (12, 212, _Y), (27, 212, _Y), (70, 20, _Y)],
    ),
    "overtake": (
        [(0, 140, _Y), (12, 212, _Y), (70, 212, _Y)],
        [(0, 44, _Y), (12, 212, _Y), (27, 212, _Y), (70, 404, _Y)],
    ),
}

MOTION_CLASSES = tuple(sorted(_MOTION_SCRIPTS))

# Frame windows (before time scaling) with violent local motion. The rob
# window opens mid-dwell so only the getaway transitions are affected; the
# fight window covers both people's final approach transitions.
_BURST_WINDOWS = {"rob": (18.0, 44.0), "fight": (22.0, 40.0)}


def gen_group_motion_corpus(
    config: MotionGroupConfig,
) -> tuple[list[GroupPair], MotionField]:
    """Seven-class pair corpus with a shared motion field.

    The field carries each person's own speed at every route transition
    (so motion energies stay near zero), except during the burst windows
    of ``rob`` and ``fight`` clips where the affected patches report the
    burst magnitude instead.
    """
    # imported here to avoid a cycle: group -> network -> grid only
    from .grid import route_from_trajectory

    rng = np.random.default_rng(config.seed)
    group_cfg = GroupCorpusConfig(
        seed=config.seed,
        noise_sigma=config.noise_sigma,
        position_jitter=config.position_jitter,
        pair_shift=config.pair_shift,
    )
    scene = group_scene()
    field_values = MotionField()
    pairs: list[GroupPair] = []
    pair_id = 0
    for label in MOTION_CLASSES:
        for _ in range(config.pairs_per_class):
            start = pair_id * config.clip_stride
            keys_a, keys_b = _MOTION_SCRIPTS[label]
            shift = tuple(rng.uniform(-config.pair_shift, config.pair_shift, 2))
            jig = config.position_jitter
            scale = float(rng.uniform(0.9, 1.1))
            off_a = (shift[0] + rng.uniform(-jig, jig), shift[1] + rng.uniform(-jig, jig))
            off_b = (shift[0] + rng.uniform(-jig, jig), shift[1] + rng.uniform(-jig, jig))
            a = _keyframe_track(
                2 * pair_id, keys_a, config.noise_sigma, rng,
                start_frame=start, offset=off_a, time_scale=scale,
            )
            b = _keyframe_track(
                2 * pair_id + 1, keys_b, config.noise_sigma, rng,
                start_frame=start, offset=off_b, time_scale=scale,
            )
            pairs.append(GroupPair(pair_id=pair_id, traj_a=a, traj_b=b, label=label))

            burst = _BURST_WINDOWS.get(label)
            for traj in (a, b):
                route = route_from_trajectory(traj, scene)
                for k, t in enumerate(route.entry_frames[1:]):
                    speed = _speed_at(traj, t)
                    for patch in (route.patches[k], route.patches[k + 1]):
                        in_burst = burst is not None and (
                            start + burst[0] * scale <= t <= start + burst[1] * scale
                        )
                        magnitude = (
                            config.burst_magnitude
                            if in_burst
                            else max(speed + rng.normal(0.0, config.field_noise), 0.0)
                        )
                        field_values.set(int(t), patch, magnitude)
            pair_id += 1
    return pairs, field_values


def _speed_at(traj: Trajectory, t: float) -> float:
    pos = int(np.searchsorted(traj.frames, t))
    if pos <= 0 or pos >= len(traj):
        return 0.0
    dt = traj.frames[pos] - traj.frames[pos - 1]
    return float(
        np.hypot(traj.xs[pos] - traj.xs[pos - 1], traj.ys[pos] - traj.ys[pos - 1]) / dt
    )


# ---- crowd flows ----

@dataclass
class CrowdFlowConfig:
    seed: int
    n_normal_frames: int = 120
    n_escape_frames: int = 60
    vectors_per_frame: int = 40
    cell_size: float = 16.0
    center: tuple[float, float] = (SCENE_W / 2.0, SCENE_H / 2.0)
    normal_magnitude: tuple[float, float] = (4.0, 12.0)
    escape_magnitude: tuple[float, float] = (24.0, 40.0)
    angle_jitter: float = 0.2      # radians around the outward direction

    relative_spec: RelativeNetworkSpec = field(
        default_factory=lambda: RelativeNetworkSpec(r_max=40)
    )


def gen_crowd_flows(
    config: CrowdFlowConfig,
) -> tuple[list[FlowVector], dict[int, bool]]:
    """Flow vectors for a normal phase followed by a radial escape phase.

    Returns the flows and per-frame ground truth (True = escape frame).
    """
    rng = np.random.default_rng(config.seed)
    flows: list[FlowVector] = []
    truth: dict[int, bool] = {}
    total = config.n_normal_frames + config.n_escape_frames
    cx, cy = config.center
    for frame in range(total):
        escape = frame >= config.n_normal_frames
        truth[frame] = escape
        for _ in range(config.vectors_per_frame):
            x = float(rng.uniform(40.0, SCENE_W - 40.0))
            y = float(rng.uniform(40.0, SCENE_H - 40.0))
            if escape:
                base = math.atan2(y - cy, x - cx)
                angle = base + float(rng.uniform(-config.angle_jitter, config.angle_jitter))
                magnitude = float(rng.uniform(*config.escape_magnitude))
            else:
                angle = float(rng.uniform(0.0, 2.0 * math.pi))
                magnitude = float(rng.uniform(*config.normal_magnitude))
            flows.append(
                FlowVector(
                    frame=frame,
                    x=x,
                    y=y,
                    dx=magnitude * math.cos(angle),
                    dy=magnitude * math.sin(angle),
                )
            )
    return flows, truth
