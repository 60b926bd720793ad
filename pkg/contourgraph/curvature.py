"""
Curvature of a closed contour by Fourier-domain differentiation.

The contour is read as the complex signal u(n) = x(n) + i y(n). Its
spectrum is multiplied by a Gaussian low-pass, and the first and second
derivatives come from multiplying by (i 2 pi f) and (i 2 pi f)^2 before the
inverse transform:

    kappa(n) = (x' y'' - y' x'') / (x'^2 + y'^2)^(3/2)

Smoothing shrinks the outline, so kappa is rescaled by the ratio of the
smoothed perimeter to the original one. Counter-clockwise convex outlines
have positive curvature.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft

from contourgraph.errors import ContourError
from contourgraph.shapes import Contour

logger = logging.getLogger(__name__)

DERIVATIVE_EPSILON = 1e-12
MIN_CURVATURE_POINTS = 8


@dataclass(frozen=True, eq=False)
class CurvatureSignal:
    """
    Per-point curvature aligned with the contour.

    Attributes:
        values: curvature per contour point
        sigma: Gaussian standard deviation in spectral bins
        normalized: True once rescaled to [0, 1]
        degenerate: True if a derivative magnitude was clamped or the
            signal was constant when normalised
    """

    values: np.ndarray
    sigma: float
    normalized: bool = False
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.values)


def default_sigma(n_points: int) -> float:
    """Default smoothing: N / 64 spectral bins."""
    return n_points / 64.0


def curvature_signal(contour: Contour, sigma: Optional[float] = None) -> CurvatureSignal:
    """
    Smoothed curvature of every contour point.

    Args:
        contour: Closed contour with at least 8 points
        sigma: Gaussian standard deviation in spectral bins (default N / 64)

    Returns:
        CurvatureSignal of the same length and order as the contour
    """
    n = len(contour)
    if n < MIN_CURVATURE_POINTS:
        raise ContourError(f"Curvature needs at least {MIN_CURVATURE_POINTS} points, got {n}")
    sigma = default_sigma(n) if sigma is None else float(sigma)
    if not sigma > 0:
        raise ContourError(f"sigma must be positive, got {sigma}")

    u = contour.x + 1j * contour.y
    spectrum = fft.fft(u)
    freq = fft.fftfreq(n)  # cycles per sample
    bins = freq * n
    smoothed = spectrum * np.exp(-0.5 * (bins / sigma) ** 2)

    omega = 2j * np.pi * freq
    d1 = fft.ifft(smoothed * omega)
    d2 = fft.ifft(smoothed * omega ** 2)

    speed = np.abs(d1)
    degenerate = bool(np.any(speed < DERIVATIVE_EPSILON))
    if degenerate:
        logger.warning("[curvature] derivative magnitude below %g; clamping", DERIVATIVE_EPSILON)
    cross = d1.real * d2.imag - d1.imag * d2.real
    kappa = cross / (np.maximum(speed, DERIVATIVE_EPSILON) ** 3)

    # undo the shrinkage of the low-pass: the sample spacing is 1, so the
    # smoothed perimeter is the summed speed
    ratio = speed.sum() / contour.perimeter()
    kappa = kappa * ratio

    values = np.asarray(kappa, dtype=np.float64)
    values.setflags(write=False)
    return CurvatureSignal(values, sigma, normalized=False, degenerate=degenerate)


def normalize_signal(signal: CurvatureSignal) -> CurvatureSignal:
    """
    Min-max rescale to [0, 1]. A constant signal maps to all 0.5 and is
    flagged degenerate.
    """
    values = np.asarray(signal.values, dtype=np.float64)
    low, high = float(values.min()), float(values.max())
    if high - low <= 0.0:
        logger.warning("[curvature] constant signal; normalising to 0.5")
        rescaled = np.full_like(values, 0.5)
        degenerate = True
    else:
        rescaled = (values - low) / (high - low)
        degenerate = signal.degenerate
    rescaled.setflags(write=False)
    return CurvatureSignal(rescaled, signal.sigma, normalized=True, degenerate=degenerate)

