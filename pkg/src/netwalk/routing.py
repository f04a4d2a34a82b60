"""Minimum-energy route maps.

For a source node u, the route map stores for every node n the smallest
total transmission energy E_min(u, n) and one route achieving it. The
search grows a settled set one node per round, always admitting the
cheapest (settled, unsettled) transition; ties resolve to the smallest
settled index, then the smallest candidate index. Nodes whose best energy
would reach the large-energy cap stay unsettled and are reported as
unreachable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .grid import SceneConfig
from .network import TransmissionNetwork

log = logging.getLogger(__name__)

# (from, to, energy) triples of route-tree transitions, for export/plots.
EdgeList = list[tuple[int, int, float]]


@dataclass
class RouteMap:
    """Minimum-energy routes from one source node to every reachable node."""

    source: int
    e_min: np.ndarray                 # per node; large_energy where unreachable
    routes: list[list[int] | None]    # per node; None where unreachable
    settled: np.ndarray               # bool per node
    large_energy: float

    @property
    def node_count(self) -> int:
        return len(self.e_min)

    def reachable(self, node: int) -> bool:
        return bool(self.settled[node])

    def route_to(self, node: int) -> list[int]:
        r = self.routes[node]
        if r is None:
            raise ValueError(f"node {node} is unreachable from {self.source}")
        return r


def sbip(network: TransmissionNetwork, source: int) -> RouteMap:
    """Route map from ``source`` by single-source iterative propagation.

    Each round scans every (settled i, unsettled j) pair for the smallest
    E_min(u, i) + e(i, j); strict improvement only, scanning i then j in
    ascending index order, which makes tie-breaking deterministic.
    """
    e = network.energy
    n = network.node_count
    big = network.large_energy
    if not 0 <= source < n:
        raise ValueError(f"source {source} outside network of {n} nodes")
    if np.any(e < 0):
        raise ValueError("negative transmission energy")

    e_min = np.full(n, big, dtype=float)
    e_min[source] = 0.0
    settled = np.zeros(n, dtype=bool)
    settled[source] = True
    routes: list[list[int] | None] = [None] * n
    routes[source] = [source]

    # dist restricted to settled rows; unsettled rows never produce candidates
    dist_rows = np.full(n, np.inf)
    dist_rows[source] = 0.0
    col_block = np.zeros(n)
    col_block[source] = np.inf

    while not settled.all():
        candidates = dist_rows[:, None] + e + col_block[None, :]
        flat = int(np.argmin(candidates))
        ic, jc = divmod(flat, n)
        best = candidates[ic, jc]
        if not best < big:
            break  # remaining nodes only reachable at or beyond the cap
        e_min[jc] = best
        routes[jc] = routes[ic] + [jc]  # type: ignore[operator]
        settled[jc] = True
        dist_rows[jc] = best
        col_block[jc] = np.inf

    return RouteMap(
        source=source, e_min=e_min, routes=routes, settled=settled, large_energy=big
    )


def route_maps_for_entrances(
    network: TransmissionNetwork, scene: SceneConfig
) -> dict[int, RouteMap]:
    """One route map per configured entrance patch."""
    return {u: sbip(network, u) for u in scene.entrance_patches}


def route_map_for_start(
    network: TransmissionNetwork,
    scene: SceneConfig,
    maps: dict[int, RouteMap],
    start: int,
) -> RouteMap:
    """Route map for a start patch, computing and caching it on demand.

    Starts outside the configured entrance set are served with a warning.
    """
    found = maps.get(start)
    if found is not None:
        return found
    if start not in scene.entrance_patches:
        log.warning("route starts at patch %d, not a configured entrance", start)
    maps[start] = sbip(network, start)
    return maps[start]


def tree_edges(route_map: RouteMap, network: TransmissionNetwork) -> EdgeList:
    """Transitions of the route tree: (predecessor, node, energy) per settled node."""
    edges: EdgeList = []
    for node in range(route_map.node_count):
        r = route_map.routes[node]
        if r is None or node == route_map.source:
            continue
        pred = r[-2]
        edges.append((pred, node, float(network.energy[pred, node])))
    return edges


def prune_route_map(
    route_map: RouteMap, network: TransmissionNetwork, threshold: float
) -> EdgeList:
    """Route-tree transitions whose energy does not exceed ``threshold``."""
    return [edge for edge in tree_edges(route_map, network) if edge[2] <= threshold]
