"""
Shared fixtures for the contourgraph test suites.
"""

import numpy as np
import pytest

from contourgraph.network import ThresholdGraph
from contourgraph.shapes import Contour, ShapeSpec, generate_shape, reference_shape


def random_graph(rng: np.random.Generator, n: int, p: float) -> ThresholdGraph:
    """Erdos-Renyi style graph: every pair linked with probability p."""
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return ThresholdGraph(upper | upper.T, threshold=0.0)


def random_contour(rng: np.random.Generator, n: int) -> Contour:
    """Star-shaped blob with n points: random smooth radius around a circle."""
    angles = 2.0 * np.pi * np.arange(n) / n
    radius = 100.0
    for harmonic in range(2, 6):
        radius = radius + rng.uniform(-8.0, 8.0) * np.cos(harmonic * angles + rng.uniform(0, 2 * np.pi))
    centre = rng.uniform(-50.0, 50.0, size=2)
    points = np.column_stack([centre[0] + radius * np.cos(angles), centre[1] + radius * np.sin(angles)])
    return Contour(points, label="blob")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def square():
    return reference_shape("square")


@pytest.fixture
def triangle():
    return reference_shape("triangle")


@pytest.fixture
def circle():
    return reference_shape("circle")


@pytest.fixture
def small_square():
    """Unit square sampled with two points per side."""
    return Contour([(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)], label="square")


@pytest.fixture
def path_graph():
    """0 - 1 - 2 - 3"""
    return ThresholdGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def star_graph():
    """Centre 0 joined to 1..4."""
    return ThresholdGraph.from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)])


@pytest.fixture
def hexagon_contour():
    return generate_shape(ShapeSpec("regular_polygon", 6, n_samples=60))
