"""
Unit tests for Fourier-domain curvature.
"""

import numpy as np
import pytest
from scipy.signal import find_peaks

from contourgraph.curvature import (
    MIN_CURVATURE_POINTS,
    CurvatureSignal,
    curvature_signal,
    default_sigma,
    normalize_signal,
)
from contourgraph.errors import ContourError
from contourgraph.shapes import PerturbSpec, ShapeSpec, generate_shape, perturb


def circular_peaks(values, prominence):
    """Peak positions of a periodic signal, each counted once."""
    n = len(values)
    peaks, _ = find_peaks(np.tile(values, 3), prominence=prominence)
    return sorted(int(p) - n for p in peaks if n <= p < 2 * n)


class TestCurvatureSignal:
    """Tests for curvature_signal."""

    def test_circle_is_constant_reciprocal_radius(self):
        circle = generate_shape(ShapeSpec("circle", n_samples=120, radius=100.0))
        signal = curvature_signal(circle)
        assert len(signal) == 120
        assert np.allclose(signal.values, 0.01, rtol=1e-3)
        assert np.ptp(signal.values) < 1e-9
        assert not signal.degenerate

    def test_counter_clockwise_is_positive(self, hexagon_contour):
        assert np.all(curvature_signal(hexagon_contour).values > 0)

    def test_square_has_four_corner_peaks(self, square):
        signal = normalize_signal(curvature_signal(square))
        peaks = circular_peaks(signal.values, prominence=0.2)
        n = len(square)
        corners = np.arange(4) * n // 4
        assert len(peaks) == 4
        for peak in peaks:
            offset = np.abs(corners - peak)
            assert np.minimum(offset, n - offset).min() <= 2

    def test_vanishing_derivative_is_clamped(self):
        tiny = generate_shape(ShapeSpec("circle", n_samples=16, radius=1e-14))
        signal = curvature_signal(tiny)
        assert signal.degenerate
        assert np.all(np.isfinite(signal.values))

    def test_rotation_invariance(self, square):
        turned = perturb(square, PerturbSpec("rotate", angle_deg=35.0))
        assert np.allclose(curvature_signal(turned).values, curvature_signal(square).values, atol=1e-9)

    def test_scale_only_rescales(self, triangle):
        scaled = perturb(triangle, PerturbSpec("scale", factor=3.0))
        raw = curvature_signal(scaled).values
        assert np.allclose(raw * 3.0, curvature_signal(triangle).values, atol=1e-9)
        a = normalize_signal(curvature_signal(scaled)).values
        b = normalize_signal(curvature_signal(triangle)).values
        assert np.allclose(a, b, atol=1e-9)

    def test_default_sigma(self):
        assert default_sigma(128) == 2.0
        assert curvature_signal(generate_shape(ShapeSpec("circle", n_samples=64))).sigma == 1.0

    def test_too_few_points(self):
        contour = generate_shape(ShapeSpec("circle", n_samples=MIN_CURVATURE_POINTS - 1))
        with pytest.raises(ContourError, match="at least"):
            curvature_signal(contour)

    def test_rejects_non_positive_sigma(self, circle):
        with pytest.raises(ContourError, match="sigma"):
            curvature_signal(circle, sigma=0.0)


class TestNormalize:
    """Tests for min-max rescaling."""

    def test_range(self, square):
        signal = normalize_signal(curvature_signal(square))
        assert signal.normalized
        assert signal.values.min() == 0.0
        assert signal.values.max() == 1.0

    def test_constant_signal(self):
        signal = normalize_signal(CurvatureSignal(np.full(5, 3.0), sigma=1.0))
        assert signal.values.tolist() == [0.5] * 5
        assert signal.degenerate

    def test_example_values(self):
        signal = normalize_signal(CurvatureSignal(np.array([0.0, 5.0, 10.0]), sigma=1.0))
        assert signal.values.tolist() == [0.0, 0.5, 1.0]
        assert not signal.degenerate

    def test_unit_range_is_unchanged(self):
        values = np.array([0.0, 0.25, 1.0, 0.75])
        signal = normalize_signal(CurvatureSignal(values, sigma=1.0))
        assert signal.values.tolist() == values.tolist()

    def test_keeps_sigma_and_clamp_flag(self):
        signal = normalize_signal(CurvatureSignal(np.array([1.0, 2.0, 4.0]), sigma=2.5, degenerate=True))
        assert signal.sigma == 2.5
        assert signal.degenerate
