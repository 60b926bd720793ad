"""
Proximity networks over contour points.

build_weighted() turns a contour into the normalised all-pairs distance
matrix W. threshold() applies one transformation:

    smaller_than  edge (i, j) iff w_ij < T
    greater_than  edge (i, j) iff w_ij > T

sweep() produces the whole series of thresholded graphs for a SweepPlan.
Pair weights are sorted once and edges are inserted (smaller_than) or
removed (greater_than) incrementally as T increases, so the edge work of a
sweep is bounded by the number of pairs rather than n_T times it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import numpy as np
from scipy.spatial.distance import pdist, squareform

from contourgraph.errors import NetworkError
from contourgraph.exports import atomic_write_text
from contourgraph.shapes import Contour

logger = logging.getLogger(__name__)

# Normalised weights are snapped to this many decimals so that equal
# distances stay equal after rotation.
WEIGHT_DECIMALS = 12


class Mode(str, Enum):
    """Comparison used by the threshold transformation."""

    SMALLER_THAN = "smaller_than"
    GREATER_THAN = "greater_than"

    @classmethod
    def parse(cls, value: Union[str, "Mode"]) -> "Mode":
        """Accept a Mode, its value, or the CLI shorthands lt / gt."""
        if isinstance(value, Mode):
            return value
        aliases = {"lt": cls.SMALLER_THAN, "<": cls.SMALLER_THAN, "gt": cls.GREATER_THAN, ">": cls.GREATER_THAN}
        text = str(value).strip().lower()
        if text in aliases:
            return aliases[text]
        try:
            return cls(text)
        except ValueError:
            raise NetworkError(f"Unknown threshold mode {value!r}; use lt, gt, smaller_than or greater_than") from None

    @property
    def short(self) -> str:
        return "lt" if self is Mode.SMALLER_THAN else "gt"


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class WeightedNet:
    """
    Normalised complete network over contour points.

    Attributes:
        w: (n, n) symmetric matrix of weights in [0, 1] with zero diagonal,
           read-only; the largest off-diagonal weight is exactly 1
    """

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise NetworkError(f"Weight matrix must be square, got {w.shape}")
        if not np.array_equal(w, w.T):
            raise NetworkError("Weight matrix must be symmetric")
        if np.any(np.diag(w) != 0):
            raise NetworkError("Weight matrix must have a zero diagonal")
        object.__setattr__(self, "w", _freeze(w))

    @property
    def n(self) -> int:
        return self.w.shape[0]


def build_weighted(contour: Contour) -> WeightedNet:
    """
    Euclidean distance between every pair of contour points, divided by the
    largest distance.

    Raises:
        NetworkError: all points coincide (normalisation undefined)
    """
    distances = pdist(contour.points, metric="euclidean")
    d_max = float(distances.max()) if distances.size else 0.0
    if d_max <= 0.0:
        raise NetworkError("All contour points coincide; cannot normalise distances")
    weights = np.round(distances / d_max, WEIGHT_DECIMALS)
    return WeightedNet(squareform(weights))


@dataclass(frozen=True, eq=False)
class ThresholdGraph:
    """
    Unweighted undirected graph from one threshold transformation.

    Attributes:
        adjacency: (n, n) read-only boolean matrix, symmetric, no self-loops
        threshold: T used to build the graph
        mode: comparison used
        degree: number of neighbours of every node
    """

    adjacency: np.ndarray
    threshold: float
    mode: Mode = Mode.SMALLER_THAN
    degree: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        adjacency = np.asarray(self.adjacency, dtype=bool)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise NetworkError(f"Adjacency must be square, got {adjacency.shape}")
        if adjacency.diagonal().any():
            raise NetworkError("Self-loops are not allowed")
        object.__setattr__(self, "adjacency", _freeze(adjacency))
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        object.__setattr__(self, "degree", _freeze(adjacency.sum(axis=1).astype(np.int64)))

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[tuple[int, int]], threshold: float = 0.0,
                   mode: Mode = Mode.SMALLER_THAN) -> "ThresholdGraph":
        """Build a graph from an explicit edge list (used for hand-made graphs)."""
        adjacency = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            if i == j:
                raise NetworkError(f"Self-loop on node {i}")
            adjacency[i, j] = adjacency[j, i] = True
        return cls(adjacency, threshold, mode)

    @classmethod
    def _snapshot(cls, adjacency: np.ndarray, degree: np.ndarray, threshold: float, mode: Mode) -> "ThresholdGraph":
        # trusted copy of a sweep state; the degrees come from the caller
        graph = object.__new__(cls)
        object.__setattr__(graph, "adjacency", _freeze(adjacency.copy()))
        object.__setattr__(graph, "threshold", threshold)
        object.__setattr__(graph, "mode", mode)
        object.__setattr__(graph, "degree", _freeze(degree.copy()))
        return graph

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.degree.sum()) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def adjacency_lists(self) -> list[np.ndarray]:
        return [self.neighbors(i) for i in range(self.n)]

    def edges(self) -> np.ndarray:
        """(M, 2) array of edges (i < j) in row-major order."""
        return np.argwhere(np.triu(self.adjacency, k=1))

    def same_edges(self, other: "ThresholdGraph") -> bool:
        return np.array_equal(self.adjacency, other.adjacency)


def _check_threshold(t: float) -> float:
    t = float(t)
    if not np.isfinite(t) or t < 0.0:
        raise NetworkError(f"Threshold must be a finite non-negative number, got {t}")
    return t


def threshold(wnet: WeightedNet, t: float, mode: Union[Mode, str] = Mode.SMALLER_THAN) -> ThresholdGraph:
    """
    Apply one threshold transformation to a weighted network.

    A weight exactly equal to t produces no edge in either mode, and the
    diagonal never produces edges.
    """
    t = _check_threshold(t)
    mode = Mode.parse(mode)
    if mode is Mode.SMALLER_THAN:
        adjacency = wnet.w < t
    else:
        adjacency = wnet.w > t
    np.fill_diagonal(adjacency, False)
    return ThresholdGraph(adjacency, t, mode)


def default_thresholds(n_thresholds: int) -> tuple[float, ...]:
    """n_T equally spaced thresholds l / n_T for l = 1..n_T (0 excluded, 1 included)."""
    if n_thresholds < 1:
        raise NetworkError(f"Need at least one threshold, got {n_thresholds}")
    return tuple(level / n_thresholds for level in range(1, n_thresholds + 1))


@dataclass(frozen=True)
class SweepPlan:
    """
    Ordered thresholds for one sweep.

    Attributes:
        thresholds: strictly increasing, non-negative values
        mode: comparison used at every threshold
    """

    thresholds: tuple[float, ...]
    mode: Mode = Mode.SMALLER_THAN

    def __post_init__(self):
        values = tuple(_check_threshold(t) for t in self.thresholds)
        if not values:
            raise NetworkError("A sweep plan needs at least one threshold")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise NetworkError(f"Thresholds must be strictly increasing: {values}")
        object.__setattr__(self, "thresholds", values)
        object.__setattr__(self, "mode", Mode.parse(self.mode))

    @classmethod
    def equally_spaced(cls, n_thresholds: int, mode: Union[Mode, str] = Mode.SMALLER_THAN) -> "SweepPlan":
        return cls(default_thresholds(n_thresholds), Mode.parse(mode))

    def __len__(self) -> int:
        return len(self.thresholds)


@dataclass
class SweepStats:
    """Edge work done by one sweep."""

    insertions: int = 0
    removals: int = 0

    @property
    def edge_operations(self) -> int:
        return self.insertions + self.removals


def sweep(wnet: WeightedNet, plan: SweepPlan, stats: Optional[SweepStats] = None) -> Iterator[ThresholdGraph]:
    """
    Thresholded graphs for every value of the plan, in plan order.

    The result is identical to calling threshold() once per value. Pair
    weights are sorted once; each step only touches the pairs whose weight
    lies between the previous and the current threshold, and degrees are
    kept up to date as pairs change. Every yielded graph is still an
    independent n x n snapshot, so output costs O(n^2) per threshold on top
    of the incremental edge work.

    Args:
        wnet: Weighted network
        plan: Thresholds and mode
        stats: Optional counter updated with the number of edge insertions
            and removals performed

    Yields:
        ThresholdGraph per threshold
    """
    n = wnet.n
    rows, cols = np.triu_indices(n, k=1)
    weights = wnet.w[rows, cols]
    order = np.argsort(weights, kind="stable")
    ranked = weights[order]
    adjacency = np.zeros((n, n), dtype=bool)
    degree = np.zeros(n, dtype=np.int64)
    stats = stats if stats is not None else SweepStats()

    def _set(pairs: np.ndarray, value: bool):
        i, j = rows[pairs], cols[pairs]
        adjacency[i, j] = value
        adjacency[j, i] = value
        step = 1 if value else -1
        np.add.at(degree, i, step)
        np.add.at(degree, j, step)

    if plan.mode is Mode.SMALLER_THAN:
        cursor = 0
        for t in plan.thresholds:
            # pairs with w < t form a prefix of the ranking
            stop = int(np.searchsorted(ranked, t, side="left"))
            if stop > cursor:
                _set(order[cursor:stop], True)
                stats.insertions += stop - cursor
                cursor = stop
            yield ThresholdGraph._snapshot(adjacency, degree, t, plan.mode)
    else:
        cursor = None
        for t in plan.thresholds:
            # pairs with w > t form a suffix of the ranking
            start = int(np.searchsorted(ranked, t, side="right"))
            if cursor is None:
                _set(order[start:], True)
                stats.insertions += len(order) - start
            elif start > cursor:
                _set(order[cursor:start], False)
                stats.removals += start - cursor
            cursor = start if cursor is None else max(cursor, start)
            yield ThresholdGraph._snapshot(adjacency, degree, t, plan.mode)

    logger.debug(
        "[network] sweep n=%d thresholds=%d insertions=%d removals=%d",
        n, len(plan), stats.insertions, stats.removals,
    )


def dump_edge_list(graph: ThresholdGraph, path: Union[str, Path]) -> Path:
    """Write the graph as an `i j` edge list, 0-based, one edge per line."""
    lines = [f"{i} {j}" for i, j in graph.edges()]
    return atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))
