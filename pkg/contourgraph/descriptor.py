"""
Feature vectors from the threshold sweep.

Three descriptor kinds:

    phi       per threshold [<k>, <k^2>, <k^3>, <cc>, <l>, rho, <b>]
              (or an ordered subset of those measurements)
    varphi    per threshold [k_mu, k_max], the degree-only descriptor
    single_t  the 7-measurement tuple at one threshold

Every vector carries a DescriptorLayout that names each position, so
feature files are self-describing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Union

import numpy as np

from contourgraph.errors import DescriptorError
from contourgraph.metrics import MEASUREMENT_NAMES, degree_stats, measure_all
from contourgraph.network import Mode, SweepPlan, build_weighted, sweep, threshold
from contourgraph.shapes import Contour, canonical_start

logger = logging.getLogger(__name__)

DescriptorKind = Literal["phi", "varphi", "single_t"]

VARPHI_NAMES: tuple[str, ...] = ("kmu", "kmax")


def format_threshold(t: float) -> str:
    return f"{t:.3f}"


@dataclass(frozen=True)
class DescriptorLayout:
    """
    Meaning of every position of a feature vector.

    Attributes:
        kind: phi, varphi or single_t
        thresholds: thresholds in sweep order
        mode: comparison used
        measurements: measurement names repeated for every threshold
    """

    kind: DescriptorKind
    thresholds: tuple[float, ...]
    mode: Mode
    measurements: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        object.__setattr__(self, "measurements", tuple(self.measurements))
        if self.kind not in ("phi", "varphi", "single_t"):
            raise DescriptorError(f"Unknown descriptor kind {self.kind!r}")
        allowed = VARPHI_NAMES if self.kind == "varphi" else MEASUREMENT_NAMES
        unknown = [m for m in self.measurements if m not in allowed]
        if unknown or not self.measurements or len(set(self.measurements)) != len(self.measurements):
            raise DescriptorError(f"Invalid measurement list {self.measurements} for {self.kind}")
        if self.kind == "single_t" and len(self.thresholds) != 1:
            raise DescriptorError("A single-threshold layout has exactly one threshold")

    def __len__(self) -> int:
        return len(self.thresholds) * len(self.measurements)

    def column_names(self) -> list[str]:
        """Column headers such as k_T0.077, cc_T0.077, ..."""
        labels = [format_threshold(t) for t in self.thresholds]
        if len(set(labels)) != len(labels):
            labels = [f"{t:.6g}" for t in self.thresholds]
        return [f"{m}_T{label}" for label in labels for m in self.measurements]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "thresholds": list(self.thresholds),
            "mode": self.mode.value,
            "measurements": list(self.measurements),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DescriptorLayout":
        return cls(
            kind=data["kind"],
            thresholds=tuple(data["thresholds"]),
            mode=Mode.parse(data["mode"]),
            measurements=tuple(data["measurements"]),
        )


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Descriptor values with their layout and optional class label."""

    values: np.ndarray
    layout: DescriptorLayout
    label: Optional[str] = None
    id: Optional[str] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or len(values) != len(self.layout):
            raise DescriptorError(
                f"Vector length {values.shape} does not match layout length {len(self.layout)}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def slice_at(self, t: float) -> np.ndarray:
        """Values recorded at threshold t."""
        try:
            index = self.layout.thresholds.index(float(t))
        except ValueError:
            raise DescriptorError(f"Threshold {t} is not part of this layout") from None
        width = len(self.layout.measurements)
        return self.values[index * width:(index + 1) * width]


def _check_measurements(measurements: Optional[Sequence[str]]) -> tuple[str, ...]:
    if measurements is None:
        return MEASUREMENT_NAMES
    chosen = set(measurements)
    unknown = chosen - set(MEASUREMENT_NAMES)
    if unknown:
        raise DescriptorError(f"Unknown measurements {sorted(unknown)}; choose from {MEASUREMENT_NAMES}")
    # keep the canonical order whatever order the caller used
    return tuple(m for m in MEASUREMENT_NAMES if m in chosen)


def extract_phi(contour: Contour, plan: SweepPlan, measurements: Optional[Sequence[str]] = None,
                disconnected_distance: Optional[int] = None) -> FeatureVector:
    """
    Generalised descriptor: the chosen measurements at every threshold of the plan.

    Args:
        contour: Shape boundary
        plan: Thresholds and mode
        measurements: Ordered subset of k, k2, k3, cc, l, rho, b (default all)
        disconnected_distance: Override for the distance of unreachable pairs
    """
    names = _check_measurements(measurements)
    wnet = build_weighted(canonical_start(contour))
    values: list[float] = []
    for graph in sweep(wnet, plan):
        measured, _ = measure_all(graph, disconnected_distance)
        values.extend(measured.as_vector(names))
    layout = DescriptorLayout("phi", plan.thresholds, plan.mode, names)
    return FeatureVector(values, layout, label=contour.label, id=contour.id)


def extract_varphi(contour: Contour, plan: SweepPlan) -> FeatureVector:
    """Degree-only descriptor: average and maximum degree at every threshold."""
    wnet = build_weighted(canonical_start(contour))
    values: list[float] = []
    for graph in sweep(wnet, plan):
        avg, peak, _ = degree_stats(graph)
        values.extend((avg, peak))
    layout = DescriptorLayout("varphi", plan.thresholds, plan.mode, VARPHI_NAMES)
    return FeatureVector(values, layout, label=contour.label, id=contour.id)


def extract_single(contour: Contour, t: float, mode: Union[Mode, str] = Mode.SMALLER_THAN,
                   disconnected_distance: Optional[int] = None) -> FeatureVector:
    """The 7-measurement tuple at a single threshold."""
    mode = Mode.parse(mode)
    graph = threshold(build_weighted(canonical_start(contour)), t, mode)
    measured, _ = measure_all(graph, disconnected_distance)
    layout = DescriptorLayout("single_t", (float(t),), mode, MEASUREMENT_NAMES)
    return FeatureVector(measured.as_vector(), layout, label=contour.label, id=contour.id)


def extract(contour: Contour, kind: str, plan: SweepPlan, measurements: Optional[Sequence[str]] = None,
            disconnected_distance: Optional[int] = None) -> FeatureVector:
    """Dispatch on descriptor kind (phi or varphi)."""
    if kind == "phi":
        return extract_phi(contour, plan, measurements, disconnected_distance)
    if kind == "varphi":
        return extract_varphi(contour, plan)
    raise DescriptorError(f"Unknown descriptor kind {kind!r}; use phi or varphi")
