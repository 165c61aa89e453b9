"""Random node placement and the unit-disk connectivity graph.

Sensors get ids 0..n-1; the base station is the extra node with id n.  Links
exist between live nodes at Euclidean distance <= radius (inclusive).  Depleted
nodes stay in the node list so their final 0 J shows up in reports, but they
vanish from every adjacency query.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field

from .energy import Battery, UJ_PER_J, quantize_uj

ROLE_SENSOR = "sensor"
ROLE_BASE_STATION = "base-station"
ROLE_COMPROMISED = "compromised"

#: The base station forwards nothing and is effectively mains-backed; a large
#: finite battery keeps the ledger conservation identity exact.
BS_ENERGY_J = 1000.0


@dataclass
class SensorNode:
    node_id: int
    x: float
    y: float
    battery: Battery
    role: str = ROLE_SENSOR
    blacklist: set[int] = field(default_factory=set)
    rate_rreq: "object | None" = None   # RateRreqTable, attached by the sim
    routes: list = field(default_factory=list)

    @property
    def alive(self) -> bool:
        return not self.battery.depleted

    def distance_to(self, other: "SensorNode") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


class TopologyError(ValueError):
    pass


class Field:
    """Node container plus the static distance-based adjacency."""

    def __init__(self, width_m: float, height_m: float, radius_m: float,
                 nodes: list[SensorNode], bs_id: int, seed_used: int,
                 redraws: int = 0):
        self.width_m = width_m
        self.height_m = height_m
        self.radius_m = radius_m
        self.nodes: dict[int, SensorNode] = {n.node_id: n for n in nodes}
        self.bs_id = bs_id
        self.seed_used = seed_used
        self.redraws = redraws
        for node in nodes:
            if not (0.0 <= node.x <= width_m and 0.0 <= node.y <= height_m):
                raise TopologyError(f"node {node.node_id} outside the field")
        if sum(1 for n in nodes if n.role == ROLE_BASE_STATION) != 1:
            raise TopologyError("exactly one base station required")
        self._adj: dict[int, list[int]] = {n.node_id: [] for n in nodes}
        ordered = sorted(nodes, key=lambda n: n.node_id)
        for i, a in enumerate(ordered):
            for b in ordered[i + 1:]:
                if a.distance_to(b) <= radius_m:
                    self._adj[a.node_id].append(b.node_id)
                    self._adj[b.node_id].append(a.node_id)
        for neigh in self._adj.values():
            neigh.sort()

    # -- queries ------------------------------------------------------------

    def node(self, node_id: int) -> SensorNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise TopologyError(f"unknown node id {node_id}") from None

    def neighbors(self, node_id: int) -> list[int]:
        """Live nodes within radio range, sorted by id."""
        self.node(node_id)
        return [j for j in self._adj[node_id] if self.nodes[j].alive]

    def static_neighbors(self, node_id: int) -> list[int]:
        """In-range ids ignoring liveness (formation-time adjacency)."""
        self.node(node_id)
        return list(self._adj[node_id])

    def bs_adjacent(self) -> list[int]:
        return self.neighbors(self.bs_id)

    def live_ids(self) -> list[int]:
        return [i for i in sorted(self.nodes) if self.nodes[i].alive]

    def sensor_ids(self) -> list[int]:
        return [i for i in sorted(self.nodes) if i != self.bs_id]

    def prune_depleted(self) -> list[int]:
        """Drop route entries that touch a dead node; adjacency needs no work
        because every query already filters on liveness.  Returns dead ids."""
        dead = {i for i, n in self.nodes.items() if not n.alive}
        if dead:
            for node in self.nodes.values():
                node.routes = [r for r in node.routes
                               if r.next_hop not in dead and r.destination not in dead]
        return sorted(dead)

    # -- graph helpers (live subgraph) --------------------------------------

    def hop_distances_from(self, origin: int) -> dict[int, int]:
        dist = {origin: 0}
        queue = deque([origin])
        while queue:
            u = queue.popleft()
            for v in self.neighbors(u):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def shortest_path(self, src: int, dst: int) -> list[int] | None:
        """Hop-shortest path; ties go to the lexicographically smallest
        node-id sequence.  None when unreachable in the live subgraph."""
        return lex_shortest_path(lambda u: self.neighbors(u), src, dst)

    def diameter_estimate(self) -> int:
        """Double-sweep BFS lower bound, always >= 1."""
        far = self.hop_distances_from(self.bs_id)
        if len(far) <= 1:
            return 1
        a = max(far, key=lambda i: (far[i], i))
        second = self.hop_distances_from(a)
        return max(1, max(second.values()))

    def connected_fraction(self) -> float:
        return len(self.hop_distances_from(self.bs_id)) / len(self.nodes)

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("node_id,x,y,role,initial_energy_j\n")
            for node_id in sorted(self.nodes):
                n = self.nodes[node_id]
                fh.write(f"{node_id},{n.x!r},{n.y!r},{n.role},"
                         f"{n.battery.initial_uj / UJ_PER_J!r}\n")


def lex_shortest_path(neighbors_of, src: int, dst: int) -> list[int] | None:
    """BFS returning the lexicographically smallest among the hop-shortest
    src->dst paths.  Within a BFS level, a node's best predecessor is the one
    whose own best path ranks lowest, so ranks propagate level by level."""
    if src == dst:
        return [src]
    rank = {src: 0}
    parent: dict[int, int] = {}
    level = [src]
    while level:
        candidates: dict[int, tuple[int, int]] = {}
        for u in level:
            for v in neighbors_of(u):
                if v not in rank:
                    best = candidates.get(v)
                    cand = (rank[u], u)
                    if best is None or cand < best:
                        candidates[v] = cand
        if not candidates:
            return None
        next_level = sorted(candidates, key=lambda v: (candidates[v][0], v))
        for i, v in enumerate(next_level):
            rank[v] = i
            parent[v] = candidates[v][1]
        if dst in parent:
            path = [dst]
            while path[-1] != src:
                path.append(parent[path[-1]])
            path.reverse()
            return path
        level = next_level
    return None


def build_field(n: int, *, width_m: float = 1000.0, height_m: float = 1000.0,
                radius_m: float = 80.0, seed: int = 0,
                min_energy_fraction: float = 0.3,
                initial_energy_cap_j: float = 1.0,
                bs_position: tuple[float, float] | None = None,
                min_connected_fraction: float = 0.9,
                max_redraws: int = 64) -> Field:
    """Place ``n`` sensors uniformly at random plus one base station.

    Initial charges are uniform in [min_energy_fraction, 1] x cap, quantized
    to the 0.25 uJ cost grid.  A draw whose base station component holds less
    than ``min_connected_fraction`` of all nodes is rejected and redrawn with
    seed+1; the redraw count is recorded on the Field for the run log.
    """
    if n < 1:
        raise TopologyError(f"need at least one sensor node, got n={n}")
    if bs_position is None:
        bs_position = (width_m / 2.0, height_m / 2.0)
    attempt_seed = seed
    for redraw in range(max_redraws + 1):
        rng = random.Random(attempt_seed)
        nodes = []
        for node_id in range(n):
            x = rng.uniform(0.0, width_m)
            y = rng.uniform(0.0, height_m)
            energy_j = rng.uniform(min_energy_fraction, 1.0) * initial_energy_cap_j
            battery = Battery(quantize_uj(energy_j * UJ_PER_J))
            nodes.append(SensorNode(node_id, x, y, battery))
        bs = SensorNode(n, bs_position[0], bs_position[1],
                        Battery(BS_ENERGY_J * UJ_PER_J), role=ROLE_BASE_STATION)
        nodes.append(bs)
        field = Field(width_m, height_m, radius_m, nodes, bs_id=n,
                      seed_used=attempt_seed, redraws=redraw)
        if field.connected_fraction() >= min_connected_fraction:
            return field
        attempt_seed += 1
    raise TopologyError(
        f"no sufficiently connected placement after {max_redraws} redraws "
        f"(n={n}, radius={radius_m})")


def pick_compromised(field: Field, count: int, seed: int,
                     min_hops_from_bs: int = 5) -> list[int]:
    """Mark ``count`` sensors as compromised, each at least ``min_hops_from_bs``
    hops from the base station when possible (farthest nodes otherwise)."""
    if count < 1:
        return []
    rng = random.Random(seed)
    dist = field.hop_distances_from(field.bs_id)
    reachable = [i for i in field.sensor_ids() if i in dist]
    eligible = sorted(i for i in reachable if dist[i] >= min_hops_from_bs)
    if len(eligible) < count:
        by_distance = sorted(reachable, key=lambda i: (-dist[i], i))
        eligible = sorted(set(eligible) | set(by_distance[:count]))
    if len(eligible) < count:
        raise TopologyError(
            f"cannot place {count} compromised nodes, only {len(eligible)} candidates")
    chosen = sorted(rng.sample(eligible, count))
    for i in chosen:
        field.nodes[i].role = ROLE_COMPROMISED
    return chosen
