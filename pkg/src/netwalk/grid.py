"""Scene grid geometry.

A scene is divided into square pixel patches laid out row-major. Object
trajectories (pixel samples over frames) become patch routes: the ordered
sequence of patches the object moves through. For person pairs, the motion
of one person relative to the other is quantized onto a cell grid centred
on the reference person.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SceneConfig:
    """Static description of a scene: image size, patch size, annotations.

    ``entrance_patches`` are the patch indices where objects usually enter
    the scene; minimum-energy route maps are precomputed from them.
    ``equivalence_sets`` are groups of patch indices treated as the same
    place (zero transmission energy between members).
    """

    image_width: int
    image_height: int
    patch_size: int
    entrance_patches: tuple[int, ...] = ()
    equivalence_sets: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.patch_size <= 0:
            raise ValueError("patch size must be positive")
        n = self.patch_count
        for p in self.entrance_patches:
            if not 0 <= p < n:
                raise ValueError(f"entrance patch {p} outside grid of {n} patches")
        seen: set[int] = set()
        for group in self.equivalence_sets:
            for p in group:
                if not 0 <= p < n:
                    raise ValueError(f"equivalence patch {p} outside grid of {n} patches")
                if p in seen:
                    raise ValueError(f"patch {p} appears in more than one equivalence set")
                seen.add(p)

    @property
    def columns(self) -> int:
        return math.ceil(self.image_width / self.patch_size)

    @property
    def rows(self) -> int:
        return math.ceil(self.image_height / self.patch_size)

    @property
    def patch_count(self) -> int:
        return self.rows * self.columns

    def patch_cell(self, patch: int) -> tuple[int, int]:
        """(row, col) of a patch index."""
        return divmod(patch, self.columns)

    def patch_center(self, patch: int) -> tuple[float, float]:
        """Pixel center of a patch, for plotting."""
        row, col = self.patch_cell(patch)
        return ((col + 0.5) * self.patch_size, (row + 0.5) * self.patch_size)


@dataclass
class Trajectory:
    """One tracked object: strictly increasing frames with pixel positions."""

    track_id: int
    frames: np.ndarray
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames, dtype=float)
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        if not (len(self.frames) == len(self.xs) == len(self.ys)):
            raise ValueError("frames, xs and ys must have equal length")
        if len(self.frames) > 1 and not np.all(np.diff(self.frames) > 0):
            raise ValueError(f"track {self.track_id}: frames must be strictly increasing")

    def __len__(self) -> int:
        return len(self.frames)


@dataclass
class PatchRoute:
    """Ordered patch sequence with consecutive duplicates removed.

    Revisits are kept: a route may pass the same patch several times, just
    never twice in a row. ``entry_frames`` (when built from a trajectory)
    holds the frame at which the object entered each patch occurrence.
    """

    patches: list[int]
    entry_frames: list[float] | None = None

    def __post_init__(self) -> None:
        if not self.patches:
            raise ValueError("route must contain at least one patch")
        for a, b in zip(self.patches, self.patches[1:]):
            if a == b:
                raise ValueError("route contains consecutive duplicate patches")
        if self.entry_frames is not None and len(self.entry_frames) != len(self.patches):
            raise ValueError("entry_frames length must match patches")

    @property
    def start(self) -> int:
        return self.patches[0]

    @property
    def end(self) -> int:
        return self.patches[-1]

    def __len__(self) -> int:
        return len(self.patches)


@dataclass
class RelativeCellRoute:
    """Route of one person through the cell grid centred on another.

    ``cells`` are (cx, cy) integer offsets in cell units; ``rings`` the
    corresponding ring indices (Chebyshev distance from the center, clamped).
    """

    cells: list[tuple[int, int]]
    rings: list[int]

    def __len__(self) -> int:
        return len(self.cells)


# ---- patch lookup ----

def locate_patch(x: float, y: float, scene: SceneConfig) -> int:
    """Patch index containing pixel (x, y); out-of-bounds points clamp to the border."""
    x = min(max(float(x), 0.0), float(scene.image_width - 1))
    y = min(max(float(y), 0.0), float(scene.image_height - 1))
    col = min(int(x // scene.patch_size), scene.columns - 1)
    row = min(int(y // scene.patch_size), scene.rows - 1)
    return row * scene.columns + col


def locate_patches(xs: np.ndarray, ys: np.ndarray, scene: SceneConfig) -> np.ndarray:
    """Vectorized ``locate_patch``."""
    x = np.clip(np.asarray(xs, dtype=float), 0.0, scene.image_width - 1)
    y = np.clip(np.asarray(ys, dtype=float), 0.0, scene.image_height - 1)
    col = np.minimum((x // scene.patch_size).astype(int), scene.columns - 1)
    row = np.minimum((y // scene.patch_size).astype(int), scene.rows - 1)
    return row * scene.columns + col


def route_from_trajectory(traj: Trajectory, scene: SceneConfig) -> PatchRoute:
    """Patch route visited by a trajectory, consecutive duplicates collapsed."""
    if len(traj) == 0:
        raise ValueError(f"track {traj.track_id}: empty input")
    idx = locate_patches(traj.xs, traj.ys, scene)
    keep = np.ones(len(idx), dtype=bool)
    keep[1:] = idx[1:] != idx[:-1]
    return PatchRoute(
        patches=[int(p) for p in idx[keep]],
        entry_frames=[float(f) for f in traj.frames[keep]],
    )


# ---- relative cell routes ----

def cell_ring(cell: tuple[int, int], r_max: int) -> int:
    """Ring index of a relative cell: Chebyshev distance clamped at r_max."""
    return min(max(abs(cell[0]), abs(cell[1])), r_max)


def relative_route(
    reference: Trajectory,
    other: Trajectory,
    cell_size: float,
    r_max: int,
) -> RelativeCellRoute:
    """Quantized route of ``other`` through the cell grid centred on ``reference``.

    Positions of ``other`` are linearly interpolated onto the reference
    frames inside the common frame range. Displacements quantize with
    round-to-nearest so the center cell is symmetric about zero.
    """
    lo = max(reference.frames[0], other.frames[0])
    hi = min(reference.frames[-1], other.frames[-1])
    mask = (reference.frames >= lo) & (reference.frames <= hi)
    if not np.any(mask):
        raise ValueError(
            f"disjoint tracks: {reference.track_id} and {other.track_id} share no frames"
        )
    frames = reference.frames[mask]
    ox = np.interp(frames, other.frames, other.xs)
    oy = np.interp(frames, other.frames, other.ys)
    dx = ox - reference.xs[mask]
    dy = oy - reference.ys[mask]
    cx = np.rint(dx / cell_size).astype(int)
    cy = np.rint(dy / cell_size).astype(int)

    cells: list[tuple[int, int]] = []
    for pair in zip(cx, cy):
        if not cells or cells[-1] != pair:
            cells.append((int(pair[0]), int(pair[1])))
    rings = [cell_ring(c, r_max) for c in cells]
    return RelativeCellRoute(cells=cells, rings=rings)
