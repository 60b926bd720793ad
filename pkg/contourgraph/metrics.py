"""
Structural measurements of a thresholded graph.

Per threshold the descriptor uses seven graph averages:

    k    average degree                    <k>
    k2   hierarchical degree, level 2      <k^2>  (sum of neighbour degrees)
    k3   hierarchical degree, level 3      <k^3>  (sum of degrees at distance 2)
    cc   average clustering coefficient    <cc>
    l    average path length               <l>
    rho  degree assortativity              rho
    b    average normalised betweenness    <b>

plus the maximum degree used by the degree-only descriptor.

Conventions:
- cc_i = 0 when k_i < 2
- a disconnected ordered pair counts as distance n (one more than the
  longest possible geodesic), unless an override is given
- rho = 0 when its denominator vanishes (regular graph or no edges)
- b_i = (1 / n^2) * sum over ordered pairs (j, k), j != k, both != i, of
  n_jk(i) / n_jk

All-pairs geodesics are found with a level-synchronous breadth-first search
run for every source at once: each level is one matrix product, and
shortest-path counts ride along with the distances. Betweenness then uses
the Brandes dependency recurrence, again one matrix product per level.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from contourgraph.errors import MetricError
from contourgraph.network import Mode, ThresholdGraph

logger = logging.getLogger(__name__)

# Order of the measurements inside the generalised descriptor
MEASUREMENT_NAMES: tuple[str, ...] = ("k", "k2", "k3", "cc", "l", "rho", "b")

ASSORTATIVITY_EPSILON = 1e-12


@dataclass(frozen=True)
class MeasurementSet:
    """Graph-level measurements at one threshold."""

    avg_degree: float
    max_degree: float
    hier_degree_2: float
    hier_degree_3: float
    avg_clustering: float
    avg_path_length: float
    assortativity: float
    avg_betweenness: float
    threshold: float
    mode: Mode

    def value(self, name: str) -> float:
        """Look up a measurement by its descriptor name (k, k2, ..., b)."""
        lookup = {
            "k": self.avg_degree,
            "k2": self.hier_degree_2,
            "k3": self.hier_degree_3,
            "cc": self.avg_clustering,
            "l": self.avg_path_length,
            "rho": self.assortativity,
            "b": self.avg_betweenness,
            "kmax": self.max_degree,
        }
        try:
            return lookup[name]
        except KeyError:
            raise MetricError(f"Unknown measurement {name!r}") from None

    def as_vector(self, names: tuple[str, ...] = MEASUREMENT_NAMES) -> list[float]:
        return [self.value(name) for name in names]

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "mode": self.mode.value,
            "avg_degree": self.avg_degree,
            "max_degree": self.max_degree,
            "hier_degree_2": self.hier_degree_2,
            "hier_degree_3": self.hier_degree_3,
            "avg_clustering": self.avg_clustering,
            "avg_path_length": self.avg_path_length,
            "assortativity": self.assortativity,
            "avg_betweenness": self.avg_betweenness,
        }


@dataclass(frozen=True, eq=False)
class NodeProfile:
    """Per-node measurements, all vectors of length n."""

    degree: np.ndarray
    clustering: np.ndarray
    betweenness: np.ndarray
    hier_degree_2: np.ndarray
    hier_degree_3: np.ndarray

    def __len__(self) -> int:
        return len(self.degree)


# ============================================================
# GEODESICS
# ============================================================

@dataclass(frozen=True, eq=False)
class _Geodesics:
    distance: np.ndarray  # int64, -1 where unreachable, 0 on the diagonal
    paths: np.ndarray  # float64 number of shortest paths, 0 where unreachable
    depth: int  # largest finite distance


def _geodesics(graph: ThresholdGraph) -> _Geodesics:
    n = graph.n
    a = graph.adjacency.astype(np.float64)
    distance = np.full((n, n), -1, dtype=np.int64)
    np.fill_diagonal(distance, 0)
    paths = np.eye(n)
    frontier = np.eye(n)
    level = 0
    while True:
        reach = frontier @ a
        reach[distance >= 0] = 0.0
        found = reach > 0.0
        if not found.any():
            break
        level += 1
        distance[found] = level
        paths[found] = reach[found]
        frontier = np.where(found, reach, 0.0)
    return _Geodesics(distance, paths, level)


def _require_nodes(graph: ThresholdGraph, minimum: int, what: str):
    if graph.n < minimum:
        raise MetricError(f"{what} needs at least {minimum} nodes, graph has {graph.n}")


# ============================================================
# INDIVIDUAL MEASUREMENTS
# ============================================================

def degree_stats(graph: ThresholdGraph) -> tuple[float, float, np.ndarray]:
    """
    Average and maximum degree.

    Returns:
        (<k>, k_max, per-node degree)
    """
    _require_nodes(graph, 1, "degree_stats")
    k = graph.degree
    return float(k.sum()) / graph.n, float(k.max()), k.copy()


def _hierarchical(graph: ThresholdGraph, geo: _Geodesics, h: int) -> np.ndarray:
    ring = (geo.distance == h - 1).astype(np.int64)
    return ring @ graph.degree


def hierarchical_degree(graph: ThresholdGraph, h: int) -> tuple[float, np.ndarray]:
    """
    Hierarchical degree of level h: for each node, the sum of the degrees of
    the nodes at geodesic distance exactly h - 1.

    Returns:
        (<k^h>, per-node k^h)
    """
    if h not in (2, 3):
        raise MetricError(f"Hierarchy level must be 2 or 3, got {h}")
    _require_nodes(graph, 1, "hierarchical_degree")
    per_node = _hierarchical(graph, _geodesics(graph), h)
    return float(per_node.sum()) / graph.n, per_node


def _clustering(graph: ThresholdGraph) -> np.ndarray:
    a = graph.adjacency.astype(np.float64)
    # closed walks of length 3 through i, counted twice per triangle
    links = np.rint(((a @ a) * a).sum(axis=1) / 2.0)
    k = graph.degree.astype(np.float64)
    pairs = k * (k - 1.0)
    return np.divide(2.0 * links, pairs, out=np.zeros_like(pairs), where=pairs > 0)


def clustering(graph: ThresholdGraph) -> tuple[float, np.ndarray]:
    """
    Clustering coefficient cc_i = 2 e_i / (k_i (k_i - 1)), 0 when k_i < 2.

    Returns:
        (<cc>, per-node cc)
    """
    _require_nodes(graph, 1, "clustering")
    per_node = _clustering(graph)
    return float(per_node.mean()), per_node


def _path_length(geo: _Geodesics, disconnected_distance: Optional[int]) -> float:
    n = geo.distance.shape[0]
    missing = n if disconnected_distance is None else int(disconnected_distance)
    d = np.where(geo.distance < 0, missing, geo.distance)
    # diagonal is 0, so summing everything sums over i != j
    return float(int(d.sum())) / (n * (n - 1))


def avg_path_length(graph: ThresholdGraph, disconnected_distance: Optional[int] = None) -> float:
    """
    Average geodesic distance over ordered pairs i != j.

    Args:
        graph: Graph with at least 2 nodes
        disconnected_distance: Distance assigned to unreachable pairs
            (default n, one more than the longest possible geodesic)
    """
    _require_nodes(graph, 2, "avg_path_length")
    return _path_length(_geodesics(graph), disconnected_distance)


def assortativity(graph: ThresholdGraph) -> float:
    """
    Pearson correlation of the degrees at either end of every edge.

    Returns 0 when the denominator is below 1e-12 (no edges, or every edge
    joins nodes of equal degree).
    """
    edges = graph.edges()
    m = len(edges)
    if m == 0:
        return 0.0
    k = graph.degree
    ki = k[edges[:, 0]]
    kj = k[edges[:, 1]]
    # exact integer sums; every term below is scaled by 4 M^2
    s_prod = int((ki * kj).sum())
    s_sum = int((ki + kj).sum())
    s_sq = int((ki * ki + kj * kj).sum())
    numerator = 4 * m * s_prod - s_sum * s_sum
    denominator = 2 * m * s_sq - s_sum * s_sum
    if denominator / (4.0 * m * m) < ASSORTATIVITY_EPSILON:
        return 0.0
    return numerator / denominator


def _betweenness(graph: ThresholdGraph, geo: _Geodesics) -> np.ndarray:
    n = graph.n
    a = graph.adjacency.astype(np.float64)
    dependency = np.zeros((n, n))
    for level in range(geo.depth, 1, -1):
        here = geo.distance == level
        coeff = np.zeros((n, n))
        coeff[here] = (1.0 + dependency[here]) / geo.paths[here]
        # pull[s, v] = sum over neighbours w of v one level further from s
        pull = coeff @ a
        parent = geo.distance == level - 1
        dependency[parent] += geo.paths[parent] * pull[parent]
    return dependency.sum(axis=0) / float(n * n)


def betweenness(graph: ThresholdGraph) -> tuple[float, np.ndarray]:
    """
    Normalised betweenness centrality over ordered pairs, scaled by 1 / n^2.

    Returns:
        (<b>, per-node b)
    """
    _require_nodes(graph, 1, "betweenness")
    per_node = _betweenness(graph, _geodesics(graph))
    return float(per_node.mean()), per_node


# ============================================================
# EVERYTHING AT ONCE
# ============================================================

def measure_all(graph: ThresholdGraph, disconnected_distance: Optional[int] = None
                ) -> tuple[MeasurementSet, NodeProfile]:
    """
    Every measurement of one graph from a single geodesic search.

    Scalar fields equal the individual functions' outputs exactly.
    """
    _require_nodes(graph, 2, "measure_all")
    geo = _geodesics(graph)
    n = graph.n
    k = graph.degree
    k2 = _hierarchical(graph, geo, 2)
    k3 = _hierarchical(graph, geo, 3)
    cc = _clustering(graph)
    b = _betweenness(graph, geo)

    measurements = MeasurementSet(
        avg_degree=float(k.sum()) / n,
        max_degree=float(k.max()),
        hier_degree_2=float(k2.sum()) / n,
        hier_degree_3=float(k3.sum()) / n,
        avg_clustering=float(cc.mean()),
        avg_path_length=_path_length(geo, disconnected_distance),
        assortativity=assortativity(graph),
        avg_betweenness=float(b.mean()),
        threshold=graph.threshold,
        mode=graph.mode,
    )
    profile = NodeProfile(degree=k.copy(), clustering=cc, betweenness=b, hier_degree_2=k2, hier_degree_3=k3)
    return measurements, profile
