"""Agglomerative information-bottleneck clustering of primitives.

Primitives become graph nodes carrying a prior mass and a task distribution;
edges connect primitives whose centroid bounding boxes overlap. Merging two
nodes costs the information lost about the tasks, and the cheapest edge is
merged greedily until the stopping rule fires. The per-merge information
drop equals the edge cost exactly, which the tests exploit as an oracle.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .types import ObjectCluster, Primitive


def _kl(p: np.ndarray, m: np.ndarray) -> float:
    # 0 * log 0 := 0; m is never zero where p is positive.
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask] / m[mask])))


def weighted_js_divergence(p: np.ndarray, q: np.ndarray, w_p: float, w_q: float) -> float:
    """Jensen-Shannon divergence with mass-proportional mixture weights, in nats."""
    total = w_p + w_q
    pi_p = w_p / total
    pi_q = w_q / total
    m = pi_p * p + pi_q * q
    return pi_p * _kl(p, m) + pi_q * _kl(q, m)


@dataclass
class MergeNode:
    id: int
    mass: float
    dist: np.ndarray
    primitive_ids: Set[int]
    gaussian_ids: Set[int]


@dataclass
class MergeEvent:
    left: int
    right: int
    merged: int
    cost: float


@dataclass
class MergeGraph:
    nodes: Dict[int, MergeNode] = field(default_factory=dict)
    adj: Dict[int, Set[int]] = field(default_factory=dict)
    next_id: int = 0
    merge_log: List[MergeEvent] = field(default_factory=list)

    def edges(self) -> List[Tuple[int, int]]:
        out = []
        for a, nbrs in self.adj.items():
            for b in nbrs:
                if a < b:
                    out.append((a, b))
        return sorted(out)

    def edge_cost(self, a: int, b: int) -> float:
        return merge_cost(self.nodes[a], self.nodes[b])


def merge_cost(node_i: MergeNode, node_j: MergeNode) -> float:
    """Information lost by merging two nodes: combined mass times their JSD."""
    return (node_i.mass + node_j.mass) * weighted_js_divergence(
        node_i.dist, node_j.dist, node_i.mass, node_j.mass
    )


def mutual_information(nodes: Sequence[MergeNode]) -> float:
    """I(clusters; tasks) of the current partition, in nats."""
    masses = np.asarray([n.mass for n in nodes])
    dists = np.asarray([n.dist for n in nodes])
    p_y = masses @ dists
    return float(sum(m * _kl(d, p_y) for m, d in zip(masses, dists)))


# Degenerate bounding-box axes get the same extent floor used everywhere else
# for degenerate boxes; otherwise single-Gaussian primitives could never
# connect to anything.
AABB_EXTENT_FLOOR = 1e-4


def _aabbs(primitives: Sequence[Primitive], centers: Mapping[int, Sequence[float]]):
    mins = np.empty((len(primitives), 3))
    maxs = np.empty((len(primitives), 3))
    for i, prim in enumerate(primitives):
        pts = np.asarray([centers[g] for g in sorted(prim.gaussian_ids)], dtype=np.float64)
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        mid = (lo + hi) / 2.0
        half = np.maximum((hi - lo) / 2.0, AABB_EXTENT_FLOOR)
        mins[i] = mid - half
        maxs[i] = mid + half
    return mins, maxs


def build_graph(
    primitives: Sequence[Primitive],
    centers: Mapping[int, Sequence[float]],
    premerge_tol: float = 1e-9,
) -> MergeGraph:
    """Build the merge graph: uniform prior mass, AABB-overlap edges.

    Edges require strictly positive overlap volume of the member-centroid
    bounding boxes on all three axes. Connected primitives whose task
    distributions are identical within ``premerge_tol`` are merged up front;
    their Jensen-Shannon divergence is zero, so the merges cost nothing.
    """
    if len(primitives) == 0:
        raise ValueError("need at least one primitive to build a graph")
    n = len(primitives)
    mins, maxs = _aabbs(primitives, centers)
    lo = np.maximum(mins[:, None, :], mins[None, :, :])
    hi = np.minimum(maxs[:, None, :], maxs[None, :, :])
    overlap = np.all(hi > lo, axis=2)
    np.fill_diagonal(overlap, False)

    dists = np.asarray([p.task_dist for p in primitives], dtype=np.float64)

    # Union-find over zero-divergence edges for the pre-merge pass.
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    ii, jj = np.nonzero(overlap)
    for a, b in zip(ii, jj):
        if a < b and np.max(np.abs(dists[a] - dists[b])) <= premerge_tol:
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    groups: Dict[int, List[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    graph = MergeGraph(next_id=n)
    node_of = np.empty(n, dtype=np.int64)
    for root, members in groups.items():
        mass = sum(primitives[i].prior_mass for i in members)
        mixed = sum(primitives[i].prior_mass * dists[i] for i in members) / mass
        node = MergeNode(
            id=root,
            mass=mass,
            dist=np.asarray(mixed, dtype=np.float64),
            primitive_ids={primitives[i].id for i in members},
            gaussian_ids=set().union(*(primitives[i].gaussian_ids for i in members)),
        )
        graph.nodes[root] = node
        graph.adj[root] = set()
        node_of[members] = root

    for a, b in zip(ii, jj):
        na, nb = int(node_of[a]), int(node_of[b])
        if na != nb:
            graph.adj[na].add(nb)
            graph.adj[nb].add(na)
    return graph


@dataclass(frozen=True)
class StoppingRule:
    """Stop merging when the cheapest edge exceeds ``delta`` nats, or, when
    ``retain_fraction`` is set, before cumulative information loss exceeds
    (1 - retain_fraction) of the initial mutual information."""

    delta: float = 1e-3
    retain_fraction: Optional[float] = None

    def __post_init__(self):
        if self.retain_fraction is not None and not (0.0 < self.retain_fraction <= 1.0):
            raise ValueError("retain_fraction must be in (0, 1]")


def agglomerate(graph: MergeGraph, stop: StoppingRule | None = None) -> List[ObjectCluster]:
    """Greedily merge the cheapest edge until the stopping rule fires.

    The merged node takes the mass sum and mass-weighted distribution of its
    parents and a fresh ID; incident edges are rewired with parallel edges
    deduplicated. Ties on cost break toward the lexicographically smallest
    (min id, max id) pair. The merge sequence is recorded on ``graph.merge_log``.
    """
    if stop is None:
        stop = StoppingRule()
    # Retain mode replaces the delta rule rather than stacking on top of it.
    budget = None
    if stop.retain_fraction is not None:
        budget = (1.0 - stop.retain_fraction) * mutual_information(
            list(graph.nodes.values())
        )

    # Merged nodes get fresh IDs, so a popped entry is stale exactly when one
    # of its endpoints no longer exists; surviving nodes never change state.
    heap: List[Tuple[float, int, int]] = []

    def push(a: int, b: int) -> None:
        if a > b:
            a, b = b, a
        heapq.heappush(heap, (graph.edge_cost(a, b), a, b))

    for a, b in graph.edges():
        push(a, b)

    dropped = 0.0
    while heap:
        cost, a, b = heapq.heappop(heap)
        if a not in graph.nodes or b not in graph.nodes:
            continue
        if budget is not None:
            if dropped + cost > budget:
                break
        elif cost > stop.delta:
            break
        dropped += cost

        ni, nj = graph.nodes[a], graph.nodes[b]
        new_id = graph.next_id
        graph.next_id += 1
        mass = ni.mass + nj.mass
        merged = MergeNode(
            id=new_id,
            mass=mass,
            dist=(ni.mass * ni.dist + nj.mass * nj.dist) / mass,
            primitive_ids=ni.primitive_ids | nj.primitive_ids,
            gaussian_ids=ni.gaussian_ids | nj.gaussian_ids,
        )
        neighbors = (graph.adj[a] | graph.adj[b]) - {a, b}
        for nid in (a, b):
            for nbr in graph.adj[nid]:
                graph.adj[nbr].discard(nid)
            del graph.adj[nid]
            del graph.nodes[nid]
        graph.nodes[new_id] = merged
        graph.adj[new_id] = set(neighbors)
        for nbr in neighbors:
            graph.adj[nbr].add(new_id)
            push(new_id, nbr)
        graph.merge_log.append(MergeEvent(left=a, right=b, merged=new_id, cost=cost))

    return [
        ObjectCluster(
            id=node.id,
            primitive_ids=set(node.primitive_ids),
            gaussian_ids=set(node.gaussian_ids),
            task_dist=node.dist.copy(),
        )
        for node in sorted(graph.nodes.values(), key=lambda n: n.id)
    ]


def prune_irrelevant(
    clusters: Sequence[ObjectCluster], threshold: float = 0.1
) -> List[ObjectCluster]:
    """Keep clusters whose best non-null task probability exceeds ``threshold``."""
    if not (0.0 <= threshold <= 1.0):
        raise ValueError("threshold must be in [0, 1]")
    return [c for c in clusters if float(np.max(c.task_dist[:-1])) > threshold]
