"""
Shape boundaries: representation, tracing, generation and perturbation.

A Contour is an ordered, implicitly closed sequence of real-valued boundary
points. Everything here is a pure function over immutable contours:

1. trace_boundary() turns a binary silhouette into a contour (Moore tracing)
2. generate_shape() builds circles, regular polygons and stars
3. resample() / interpolate() redistribute and blend contours by arc length
4. perturb() applies the robustness transforms (rotation, scale, noise,
   continuous and random degradation)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Literal, Optional

import cv2
import numpy as np

from contourgraph.errors import ContourError

logger = logging.getLogger(__name__)

ShapeKind = Literal["circle", "regular_polygon", "star"]
PerturbKind = Literal["rotate", "scale", "noise", "degrade_continuous", "degrade_random"]

# Number of degradation levels used by the leaves robustness study
DEGRADATION_LEVELS = 17


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Contour:
    """
    Ordered closed boundary of a 2-D shape.

    Attributes:
        points: (N, 2) float64 array of (x, y) coordinates in pixels, read-only
        label: Optional class tag
        id: Optional sample identifier
    """

    points: np.ndarray
    label: Optional[str] = None
    id: Optional[str] = None

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ContourError(f"Expected points with shape (N, 2), got {points.shape}")
        if points.shape[0] < 3:
            raise ContourError(f"A contour needs at least 3 points, got {points.shape[0]}")
        if not np.all(np.isfinite(points)):
            raise ContourError("Contour coordinates must be finite")
        repeats = np.all(points == np.roll(points, -1, axis=0), axis=1)
        if repeats.any():
            index = int(np.flatnonzero(repeats)[0])
            raise ContourError(
                f"Consecutive points {index} and {(index + 1) % len(points)} are identical"
            )
        object.__setattr__(self, "points", _freeze(points))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def perimeter(self) -> float:
        """Length of the closed polyline through the points."""
        steps = np.roll(self.points, -1, axis=0) - self.points
        return float(np.hypot(steps[:, 0], steps[:, 1]).sum())

    def with_points(self, points: np.ndarray) -> "Contour":
        """Copy of this contour (same label and id) with new points."""
        return Contour(points, label=self.label, id=self.id)

    def shifted(self, offset: int) -> "Contour":
        """Cyclic shift of the start point by `offset` positions."""
        return self.with_points(np.roll(self.points, -offset, axis=0))


def canonical_start(contour: Contour) -> Contour:
    """
    Shift the contour so its lexicographically smallest (x, y) point comes first.

    The result depends only on the set of points and their cyclic order, so
    every cyclic shift of a contour maps to the same array.
    """
    order = np.lexsort((contour.y, contour.x))
    start = int(order[0])
    if start == 0:
        return contour
    return contour.shifted(start)


# ============================================================
# BOUNDARY TRACING
# ============================================================

# Moore neighbourhood in clockwise order (image coordinates, rows grow down),
# starting from the west neighbour.
_MOORE = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))


def trace_boundary(image: np.ndarray) -> Contour:
    """
    Trace the outer boundary of a single binary silhouette.

    Moore-neighbour tracing, clockwise in image coordinates, starting from
    the topmost-then-leftmost foreground pixel. Points are returned as
    (x=column, y=row).

    Args:
        image: 2-D array; any nonzero pixel is foreground

    Returns:
        Contour of boundary pixel coordinates

    Raises:
        ContourError: no foreground, more than one 4-connected component,
            or fewer than 3 boundary pixels
    """
    raster = np.asarray(image)
    if raster.ndim != 2:
        raise ContourError(f"Expected a 2-D raster, got shape {raster.shape}")
    mask = (raster != 0).astype(np.uint8)
    if not mask.any():
        raise ContourError("Raster has no foreground pixels")

    n_labels, _ = cv2.connectedComponents(mask, connectivity=4)
    if n_labels - 1 != 1:
        raise ContourError(
            f"Raster must contain exactly one 4-connected region, found {n_labels - 1}"
        )

    padded = np.pad(mask, 1)
    rows, cols = np.nonzero(padded)
    top = rows.min()
    start = (int(top), int(cols[rows == top].min()))

    points: list[tuple[int, int]] = []
    pixel, back = start, 0
    first_move: Optional[tuple[tuple[int, int], tuple[int, int]]] = None
    while True:
        step = None
        for k in range(1, 9):
            index = (back + k) % 8
            dr, dc = _MOORE[index]
            candidate = (pixel[0] + dr, pixel[1] + dc)
            if padded[candidate]:
                step = index
                break
        if step is None:
            # isolated pixel
            points.append(pixel)
            break

        dr, dc = _MOORE[step]
        nxt = (pixel[0] + dr, pixel[1] + dc)
        if first_move is None:
            first_move = (pixel, nxt)
        elif (pixel, nxt) == first_move:
            break
        points.append(pixel)

        # the last background pixel checked becomes the backtrack of the next pixel
        pr, pc = _MOORE[(step - 1) % 8]
        previous = (pixel[0] + pr, pixel[1] + pc)
        back = _MOORE.index((previous[0] - nxt[0], previous[1] - nxt[1]))
        pixel = nxt

    if len(points) < 3:
        raise ContourError(f"Boundary has {len(points)} pixels, at least 3 are required")

    # undo the padding and swap to (x, y)
    coords = np.array([(c - 1, r - 1) for r, c in points], dtype=np.float64)
    return Contour(coords)


# ============================================================
# GENERATION AND RESAMPLING
# ============================================================

@dataclass(frozen=True)
class ShapeSpec:
    """
    Ideal outline to sample.

    Attributes:
        kind: circle, regular_polygon or star
        n_sides_or_tips: polygon sides or star tips (ignored for circles)
        n_samples: number of contour points
        inner_radius_ratio: star inner/outer radius, in (0, 1)
        center: (x, y) of the outline centre in pixels
        radius: circumradius in pixels
    """

    kind: ShapeKind
    n_sides_or_tips: int = 4
    n_samples: int = 120
    inner_radius_ratio: float = 0.5
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 100.0

    def __post_init__(self):
        if self.kind not in ("circle", "regular_polygon", "star"):
            raise ContourError(f"Unknown shape kind: {self.kind!r}")
        if self.n_samples < 3:
            raise ContourError(f"n_samples must be >= 3, got {self.n_samples}")
        if self.radius <= 0:
            raise ContourError(f"radius must be positive, got {self.radius}")
        if self.kind == "circle":
            return
        minimum = 3 if self.kind == "regular_polygon" else 2
        if self.n_sides_or_tips < minimum:
            raise ContourError(
                f"{self.kind} needs n_sides_or_tips >= {minimum}, got {self.n_sides_or_tips}"
            )
        if self.n_samples < 3 * self.n_sides_or_tips:
            raise ContourError(
                f"n_samples={self.n_samples} gives fewer than 3 samples per edge "
                f"for {self.n_sides_or_tips} sides/tips"
            )
        if self.kind == "star" and not 0.0 < self.inner_radius_ratio < 1.0:
            raise ContourError(
                f"inner_radius_ratio must be in (0, 1), got {self.inner_radius_ratio}"
            )

    def vertices(self) -> np.ndarray:
        """Corner points of the ideal polygon or star, counter-clockwise."""
        cx, cy = self.center
        m = self.n_sides_or_tips
        if self.kind == "regular_polygon":
            angles = 2.0 * np.pi * (np.arange(m) + 0.5) / m
            radii = np.full(m, self.radius)
        elif self.kind == "star":
            angles = np.pi / 2.0 + np.pi * np.arange(2 * m) / m
            radii = np.where(
                np.arange(2 * m) % 2 == 0, self.radius, self.radius * self.inner_radius_ratio
            )
        else:
            raise ContourError("A circle has no vertices")
        return np.column_stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)])


def _sample_closed_polyline(points: np.ndarray, n: int) -> np.ndarray:
    closed = np.vstack([points, points[:1]])
    segments = closed[1:] - closed[:-1]
    seg_len = np.hypot(segments[:, 0], segments[:, 1])
    arc = np.concatenate(([0.0], np.cumsum(seg_len)))
    total = float(arc[-1])
    if total <= 0.0:
        raise ContourError("Contour has zero perimeter")

    target = total * np.arange(n) / n
    index = np.searchsorted(arc, target, side="right") - 1
    index = np.clip(index, 0, len(seg_len) - 1)
    denom = np.where(seg_len[index] == 0.0, 1.0, seg_len[index])
    local = ((target - arc[index]) / denom)[:, None]
    return closed[index] + local * segments[index]


def generate_shape(spec: ShapeSpec) -> Contour:
    """
    Sample an ideal outline uniformly by arc length.

    Circles get points at equal angles; polygons and stars get points along
    the edges between consecutive vertices, starting at the first vertex.
    """
    if spec.kind == "circle":
        angles = 2.0 * np.pi * np.arange(spec.n_samples) / spec.n_samples
        cx, cy = spec.center
        points = np.column_stack(
            [cx + spec.radius * np.cos(angles), cy + spec.radius * np.sin(angles)]
        )
        return Contour(points)
    return Contour(_sample_closed_polyline(spec.vertices(), spec.n_samples))


def resample(contour: Contour, n: int) -> Contour:
    """
    Redistribute a contour to `n` points equally spaced by arc length.

    The first output point equals the first input point.
    """
    if n < 3:
        raise ContourError(f"Cannot resample to fewer than 3 points, got {n}")
    return contour.with_points(_sample_closed_polyline(contour.points, n))


def interpolate(a: Contour, b: Contour, alpha: float) -> Contour:
    """
    Blend two contours point by point.

    Both contours are resampled to max(|a|, |b|) points; b is then aligned to
    a by the cyclic shift and orientation minimising the total point-to-point
    distance, and the result is (1 - alpha) * a + alpha * b.

    Args:
        a: Contour at alpha = 0
        b: Contour at alpha = 1
        alpha: Blend factor in [0, 1]
    """
    if not 0.0 <= alpha <= 1.0:
        raise ContourError(f"alpha must be in [0, 1], got {alpha}")
    n = max(len(a), len(b))
    pa = resample(a, n).points
    pb = resample(b, n).points

    shifts = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    rows = np.arange(n)[:, None]
    best_cost, best = np.inf, pb
    for candidate in (pb, pb[::-1]):
        dist = np.linalg.norm(pa[:, None, :] - candidate[None, :, :], axis=2)
        # cost[s] = sum_i dist[i, (i + s) % n]
        cost = dist[rows, shifts].sum(axis=0)
        s = int(np.argmin(cost))
        if cost[s] < best_cost:
            best_cost, best = cost[s], np.roll(candidate, -s, axis=0)

    if alpha == 0.0:
        blended = pa
    elif alpha == 1.0:
        blended = best
    else:
        blended = (1.0 - alpha) * pa + alpha * best
    return Contour(blended, label=a.label)


# ============================================================
# PERTURBATIONS
# ============================================================

@dataclass(frozen=True)
class PerturbSpec:
    """
    One robustness transform.

    Only the fields of the active kind are read:
        rotate             angle_deg
        scale              factor
        noise              noise_level, seed
        degrade_continuous degrade_fraction, seed
        degrade_random     degrade_fraction, seed
    """

    kind: PerturbKind
    angle_deg: float = 0.0
    factor: float = 1.0
    noise_level: int = 0
    degrade_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("rotate", "scale", "noise", "degrade_continuous", "degrade_random"):
            raise ContourError(f"Unknown perturbation kind: {self.kind!r}")
        if self.kind == "scale" and not self.factor > 0:
            raise ContourError(f"Scale factor must be positive, got {self.factor}")
        if self.kind == "noise" and (self.noise_level < 0 or int(self.noise_level) != self.noise_level):
            raise ContourError(f"noise_level must be a non-negative integer, got {self.noise_level}")
        if self.kind.startswith("degrade") and not 0.0 <= self.degrade_fraction < 1.0:
            raise ContourError(f"degrade_fraction must be in [0, 1), got {self.degrade_fraction}")
        if self.seed < 0:
            raise ContourError(f"seed must be unsigned, got {self.seed}")

    @property
    def tag(self) -> str:
        """Short name used for output files, e.g. rotate_35 or degrade_random_0.2."""
        if self.kind == "rotate":
            return f"rotate_{self.angle_deg:g}"
        if self.kind == "scale":
            return f"scale_{self.factor:g}"
        if self.kind == "noise":
            return f"noise_{self.noise_level}"
        return f"{self.kind}_{self.degrade_fraction:g}"

    def to_dict(self) -> dict:
        active = {
            "rotate": ("angle_deg",),
            "scale": ("factor",),
            "noise": ("noise_level", "seed"),
            "degrade_continuous": ("degrade_fraction", "seed"),
            "degrade_random": ("degrade_fraction", "seed"),
        }[self.kind]
        return {"kind": self.kind, **{name: getattr(self, name) for name in active}}

    @classmethod
    def from_dict(cls, data: dict) -> "PerturbSpec":
        data = dict(data)
        if "degrade_level" in data:
            data["degrade_fraction"] = degradation_fraction(int(data.pop("degrade_level")))
        unknown = set(data) - {"kind", "angle_deg", "factor", "noise_level", "degrade_fraction", "seed"}
        if unknown:
            raise ContourError(f"Unknown perturbation fields: {sorted(unknown)}")
        return cls(**data)

    def with_seed(self, seed: int) -> "PerturbSpec":
        return replace(self, seed=seed)


def degradation_fraction(level: int) -> float:
    """Fraction of points removed at a degradation level 0..17 (level / 34)."""
    if not 0 <= level <= DEGRADATION_LEVELS:
        raise ContourError(f"Degradation level must be in 0..{DEGRADATION_LEVELS}, got {level}")
    return level / (2 * DEGRADATION_LEVELS)


def _drop_repeats(points: np.ndarray) -> np.ndarray:
    keep = np.any(points != np.roll(points, 1, axis=0), axis=1)
    if not keep.any():
        return points[:1]
    if not keep.all():
        logger.debug("[shapes] collapsed %d repeated points", int((~keep).sum()))
    return points[keep]


def perturb(contour: Contour, spec: PerturbSpec) -> Contour:
    """
    Apply one robustness transform.

    rotate and scale act about the centroid on real coordinates (no
    re-rasterisation). noise adds integer offsets drawn uniformly from
    [-noise_level, noise_level] to x and y. Degradation removes
    floor(degrade_fraction * N) points, either one contiguous run starting at
    a random index or distinct random indices; survivors keep their order.

    Raises:
        ContourError: the result would have fewer than 3 points
    """
    points = contour.points
    n = len(contour)

    if spec.kind == "rotate":
        theta = np.deg2rad(spec.angle_deg)
        rotation = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        center = contour.centroid
        return contour.with_points((points - center) @ rotation.T + center)

    if spec.kind == "scale":
        center = contour.centroid
        return contour.with_points((points - center) * spec.factor + center)

    rng = np.random.default_rng(spec.seed)

    if spec.kind == "noise":
        if spec.noise_level == 0:
            return contour
        offsets = rng.integers(-spec.noise_level, spec.noise_level + 1, size=points.shape)
        noisy = _drop_repeats(points + offsets)
        if len(noisy) < 3:
            raise ContourError("Noise collapsed the contour to fewer than 3 points")
        return contour.with_points(noisy)

    removed = int(np.floor(spec.degrade_fraction * n + 1e-9))
    if n - removed < 3:
        raise ContourError(
            f"Removing {removed} of {n} points leaves fewer than 3 (fraction {spec.degrade_fraction})"
        )
    if removed == 0:
        return contour
    if spec.kind == "degrade_continuous":
        start = int(rng.integers(n))
        drop = (start + np.arange(removed)) % n
    else:
        drop = rng.choice(n, size=removed, replace=False)
    survivors = _drop_repeats(np.delete(points, drop, axis=0))
    if len(survivors) < 3:
        raise ContourError("Degradation left fewer than 3 distinct points")
    return contour.with_points(survivors)


# ============================================================
# REFERENCE SHAPES
# ============================================================

def _reference_shapes() -> dict[str, ShapeSpec]:
    return {
        "circle": ShapeSpec("circle", n_samples=120),
        "hexagon": ShapeSpec("regular_polygon", 6, n_samples=120),
        "pentagon": ShapeSpec("regular_polygon", 5, n_samples=120),
        "square": ShapeSpec("regular_polygon", 4, n_samples=120),
        "triangle": ShapeSpec("regular_polygon", 3, n_samples=120),
        "star6": ShapeSpec("star", 6, n_samples=120, inner_radius_ratio=0.6),
        "star5": ShapeSpec("star", 5, n_samples=120, inner_radius_ratio=0.5),
        "star4": ShapeSpec("star", 4, n_samples=120, inner_radius_ratio=0.5),
    }


# The eight regular shapes of the internal-angle and interpolation studies;
# the polygons run from the largest internal angle to the smallest.
REFERENCE_SHAPES: dict[str, ShapeSpec] = _reference_shapes()


def reference_shape(name: str, n_samples: Optional[int] = None) -> Contour:
    """Generate one of REFERENCE_SHAPES by name, labelled with that name."""
    try:
        spec = REFERENCE_SHAPES[name]
    except KeyError:
        raise ContourError(
            f"Unknown reference shape {name!r}; choose from {sorted(REFERENCE_SHAPES)}"
        ) from None
    if n_samples is not None:
        spec = replace(spec, n_samples=n_samples)
    contour = generate_shape(spec)
    return Contour(contour.points, label=name, id=name)
