"""Transmission networks over scene patches and relative cells.

Moving objects are treated as packages transmitted through a network whose
nodes are scene patches (or relative cells). Each directed node pair
carries a transmission energy; the energy of a route is the sum of the
energies of its consecutive transitions.

Three network families live here:

* trained scene networks (dense energy matrix, see ``training``),
* the uniform scene network for group analysis (8-neighbour moves cost 1,
  farther pairs cost the Chebyshev cell distance),
* relative networks around a reference person, where energies depend only
  on the ring index of the cells involved (``enr``/``ewr``), plus the
  motion-intensity energy that compares tracked speed with a motion field.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import PatchRoute, RelativeCellRoute, Trajectory, cell_ring

# Energy assigned to transitions that no training data supports, and the
# ceiling for any finite energy. Routes that accumulate this much energy
# are effectively impossible.
LARGE_ENERGY = 1.0e6


@dataclass
class TransmissionNetwork:
    """Dense energy matrix over patch nodes.

    ``energy[i, j]`` is the transmission energy from node i to node j.
    Undirected networks store a symmetric matrix.
    """

    energy: np.ndarray
    directed: bool = False
    large_energy: float = LARGE_ENERGY

    def __post_init__(self) -> None:
        self.energy = np.asarray(self.energy, dtype=float)
        if self.energy.ndim != 2 or self.energy.shape[0] != self.energy.shape[1]:
            raise ValueError("energy must be a square matrix")
        if np.any(self.energy < 0):
            raise ValueError("transmission energies must be non-negative")
        if np.any(self.energy > self.large_energy):
            raise ValueError("transmission energies must not exceed the large-energy cap")
        if not self.directed and not np.array_equal(self.energy, self.energy.T):
            raise ValueError("undirected network requires a symmetric energy matrix")

    @property
    def node_count(self) -> int:
        return self.energy.shape[0]


def total_energy(route: PatchRoute, network: TransmissionNetwork) -> float:
    """Total transmission energy of a route: sum over consecutive transitions."""
    n = network.node_count
    for p in route.patches:
        if not 0 <= p < n:
            raise ValueError(f"route patch {p} outside network of {n} nodes")
    if len(route) < 2:
        return 0.0
    a = np.asarray(route.patches[:-1])
    b = np.asarray(route.patches[1:])
    return float(np.sum(network.energy[a, b]))


def build_scene_group_network(rows: int, cols: int) -> TransmissionNetwork:
    """Uniform scene network for group analysis.

    Undirected; 8-neighbour patch pairs cost 1 and any other pair costs the
    Chebyshev distance between their cells (the minimum number of
    8-neighbour moves between them).
    """
    if rows <= 0 or cols <= 0:
        raise ValueError("grid dimensions must be positive")
    idx = np.arange(rows * cols)
    r = idx // cols
    c = idx % cols
    dr = np.abs(r[:, None] - r[None, :])
    dc = np.abs(c[:, None] - c[None, :])
    return TransmissionNetwork(energy=np.maximum(dr, dc).astype(float), directed=False)


# ---- relative networks ----

@dataclass(frozen=True)
class RelativeNetworkSpec:
    """Ring structure of a relative network around a reference person.

    Cells at Chebyshev distance r (clamped at ``r_max``) form ring r.
    ``ewr_scheme`` selects which ring weights a crossing: ``head`` uses the
    destination ring of each unit crossing, ``tail`` the source ring.
    """

    r_max: int = 15
    ewr_scheme: str = "head"

    def __post_init__(self) -> None:
        if self.r_max < 0:
            raise ValueError("r_max must be non-negative")
        if self.ewr_scheme not in ("head", "tail"):
            raise ValueError(f"unknown ewr scheme {self.ewr_scheme!r}")

    def ring_weight(self, ring: int) -> float:
        """Weight of ring r; larger near the center: w(r) = 1 / (r + 1)."""
        return 1.0 / (ring + 1)


def enr_energy(
    from_cell: tuple[int, int], to_cell: tuple[int, int], spec: RelativeNetworkSpec
) -> float:
    """Equal-ring-weight energy of one transition.

    +1 per ring moved toward the center, -1 per ring moved outward, 0 for
    lateral moves; multi-ring jumps contribute the telescoped sum
    ring(from) - ring(to).
    """
    return float(cell_ring(from_cell, spec.r_max) - cell_ring(to_cell, spec.r_max))


def ewr_energy(
    from_cell: tuple[int, int], to_cell: tuple[int, int], spec: RelativeNetworkSpec
) -> float:
    """Weighted-ring energy of one transition.

    A multi-ring jump is the telescoped sum of unit ring crossings. Under
    the ``head`` scheme an inward crossing into ring r contributes +w(r)
    and an outward crossing into ring r contributes -w(r); ``tail`` takes
    the weight from the source ring of each crossing instead.
    """
    rf = cell_ring(from_cell, spec.r_max)
    rt = cell_ring(to_cell, spec.r_max)
    if rf == rt:
        return 0.0
    head = spec.ewr_scheme == "head"
    if rt < rf:  # inward
        if head:
            return float(sum(spec.ring_weight(r) for r in range(rt, rf)))
        return float(sum(spec.ring_weight(r) for r in range(rt + 1, rf + 1)))
    # outward
    if head:
        return -float(sum(spec.ring_weight(r) for r in range(rf + 1, rt + 1)))
    return -float(sum(spec.ring_weight(r) for r in range(rf, rt)))


def relative_route_enr(route: RelativeCellRoute, spec: RelativeNetworkSpec) -> float:
    """Sum of enr energies over a relative route's transitions."""
    return float(
        sum(enr_energy(a, b, spec) for a, b in zip(route.cells, route.cells[1:]))
    )


def relative_route_ewr(route: RelativeCellRoute, spec: RelativeNetworkSpec) -> float:
    """Sum of ewr energies over a relative route's transitions."""
    return float(
        sum(ewr_energy(a, b, spec) for a, b in zip(route.cells, route.cells[1:]))
    )


# ---- motion-intensity energy ----

@dataclass
class MotionField:
    """Per-frame, per-patch mean motion magnitude (pixels per frame)."""

    values: dict[tuple[int, int], float] = field(default_factory=dict)

    def get(self, frame: int, patch: int) -> float | None:
        return self.values.get((int(frame), int(patch)))

    def set(self, frame: int, patch: int, magnitude: float) -> None:
        self.values[(int(frame), int(patch))] = float(magnitude)


def motion_intensity_energy(
    route: PatchRoute,
    transition_times: list[float],
    field_values: MotionField,
    traj: Trajectory,
) -> tuple[float, int]:
    """Motion-intensity energy of a route and the count of missing field entries.

    Each transition i -> j at frame t contributes |v_field - v_object| where
    v_field is the mean of the two patches' field magnitudes at t and
    v_object is the object's one-frame backward-difference speed. Missing
    field entries count as magnitude 0 and are tallied in the second return
    value.
    """
    if len(transition_times) != len(route) - 1:
        raise ValueError("need one transition time per route transition")
    total = 0.0
    missing = 0
    for k, t in enumerate(transition_times):
        i, j = route.patches[k], route.patches[k + 1]
        mags = []
        for patch in (i, j):
            m = field_values.get(int(t), patch)
            if m is None:
                missing += 1
                m = 0.0
            mags.append(m)
        v_field = 0.5 * (mags[0] + mags[1])
        total += abs(v_field - _object_speed(traj, t))
    return total, missing


def _object_speed(traj: Trajectory, t: float) -> float:
    """Backward-difference speed of the object at frame t, in pixels/frame."""
    pos = int(np.searchsorted(traj.frames, t))
    if pos >= len(traj) or traj.frames[pos] != t:
        raise ValueError(f"track {traj.track_id}: no sample at frame {t}")
    if pos == 0:
        return 0.0
    dt = traj.frames[pos] - traj.frames[pos - 1]
    dx = traj.xs[pos] - traj.xs[pos - 1]
    dy = traj.ys[pos] - traj.ys[pos - 1]
    return float(np.hypot(dx, dy) / dt)
