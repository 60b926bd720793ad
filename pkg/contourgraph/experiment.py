"""
Experiment drivers: the full pipeline and the studies built on it.

run_experiment() ties everything together for one ExperimentConfig:

    load -> perturb -> extract -> classify -> write

and leaves in the output directory

    config.json                 resolved config (rerun it to reproduce)
    features[_<tag>].csv/.json  descriptor matrix + sidecar, per grid entry
    report[_<tag>].json/.txt    accuracy report, per grid entry
    summary.txt                 mean +/- std table over the grid
    profiles/<id>.csv           per-node measurements (profile_threshold set)

A failing stage raises ExperimentError naming the stage.

The study helpers (sweep_study, single_threshold_study,
interpolation_curves, measurement_curves) return plain rows and have
matching writers, so the CLI and the tests share one code path.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from contourgraph.classify import AccuracyReport, LabeledDataset, cross_validate
from contourgraph.config import ExperimentConfig
from contourgraph.datasets import load_dataset, synthetic_dataset
from contourgraph.descriptor import DescriptorLayout, FeatureVector, extract
from contourgraph.errors import ContourGraphError, ExperimentError
from contourgraph.exports import (
    Provenance, atomic_write_text, format_table, write_csv, write_features, write_measurements, write_profile,
    write_report,
)
from contourgraph.metrics import MEASUREMENT_NAMES, MeasurementSet, measure_all
from contourgraph.network import Mode, SweepPlan, build_weighted, sweep, threshold
from contourgraph.shapes import Contour, PerturbSpec, canonical_start, interpolate, perturb

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DEFAULT_SWEEP_GRID = (13, 10, 7, 4)


@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except ExperimentError:
        raise
    except (ContourGraphError, OSError) as e:
        raise ExperimentError(name, str(e)) from e


def derived_seed(*parts: int) -> int:
    """Deterministic 32-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


# ============================================================
# PIPELINE PIECES
# ============================================================

def load_contours(cfg: ExperimentConfig) -> list[Contour]:
    """Contours of the configured dataset directory or synthetic dataset."""
    if cfg.dataset is not None:
        return load_dataset(cfg.dataset, skip_bad=cfg.skip_bad)
    spec = cfg.synthetic
    return synthetic_dataset(spec.n_per_class, spec.noise_level, spec.n_samples, seed=cfg.seed)


def perturb_dataset(contours: Sequence[Contour], spec: PerturbSpec, seed: int = 0) -> list[Contour]:
    """
    Apply one perturbation to every contour. Random kinds get an independent
    seed per contour, derived from (seed, spec.seed, index).
    """
    return [
        perturb(contour, spec.with_seed(derived_seed(seed, spec.seed, index)))
        for index, contour in enumerate(contours)
    ]


def extract_dataset(contours: Sequence[Contour], kind: str, plan: SweepPlan,
                    measurements: Optional[Sequence[str]] = None,
                    disconnected_distance: Optional[int] = None, jobs: int = 1) -> list[FeatureVector]:
    """
    Descriptor of every contour, in input order.

    Args:
        contours: Shapes to describe
        kind: phi or varphi
        plan: Thresholds and mode
        measurements: Measurement subset for phi
        disconnected_distance: Override for unreachable pairs
        jobs: Worker threads; the output does not depend on it
    """
    def work(contour: Contour) -> FeatureVector:
        return extract(contour, kind, plan, measurements, disconnected_distance)

    progress = dict(total=len(contours), desc=f"extract {kind}", disable=not logger.isEnabledFor(logging.INFO),
                    leave=False)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(tqdm(pool.map(work, contours), **progress))
    return [work(contour) for contour in tqdm(contours, **progress)]


def _require_labels(contours: Sequence[Contour]):
    unlabeled = [c.id or "?" for c in contours if not c.label]
    if unlabeled:
        raise ExperimentError("load", f"{len(unlabeled)} contour(s) have no class label, e.g. {unlabeled[0]}")


# ============================================================
# RUN EXPERIMENT
# ============================================================

@dataclass
class ExperimentResult:
    """Paths and reports produced by one run, keyed by grid tag."""

    out_dir: Path
    provenance: Provenance
    reports: dict[str, AccuracyReport] = field(default_factory=dict)
    features: dict[str, Path] = field(default_factory=dict)
    profiles: list[Path] = field(default_factory=list)
    summary: Optional[Path] = None


def run_experiment(cfg: ExperimentConfig, out_dir: PathLike) -> ExperimentResult:
    """
    Run the configured pipeline and write every artifact.

    With an empty perturbation grid the run yields one report tagged
    `original`; otherwise one report per grid entry, tagged PerturbSpec.tag.

    Raises:
        ExperimentError: any stage failure, with the stage name attached
    """
    out = Path(out_dir)
    provenance = Provenance(cfg.config_hash(), cfg.seed)
    config_dict = cfg.to_dict()
    result = ExperimentResult(out, provenance)
    plan = cfg.plan()
    logger.info("[experiment] %s: %s descriptor, %d thresholds, %s", cfg.name, cfg.descriptor, len(plan),
                plan.mode.value)

    with _stage("write"):
        cfg.save(out / "config.json")

    with _stage("load"):
        contours = load_contours(cfg)
        _require_labels(contours)

    grid: list[tuple[str, Optional[PerturbSpec]]] = [(p.tag, p) for p in cfg.perturbations] or [("original", None)]
    rows = []
    for tag, spec in grid:
        with _stage("perturb"):
            shapes = contours if spec is None else perturb_dataset(contours, spec, cfg.seed)
        with _stage("extract"):
            vectors = extract_dataset(shapes, cfg.descriptor, plan, cfg.measurements, cfg.disconnected_distance,
                                      cfg.jobs)
        with _stage("classify"):
            data = LabeledDataset.from_vectors(vectors)
            report = cross_validate(data, cfg.classifier, cfg.folds, cfg.repeats, cfg.seed, cfg.scale, cfg.jobs)
        suffix = "" if spec is None else f"_{tag}"
        with _stage("write"):
            result.features[tag] = write_features(out / f"features{suffix}.csv", vectors, provenance, config_dict)
            write_report(out / f"report{suffix}", report, provenance, name=tag, config=config_dict)
        result.reports[tag] = report
        rows.append((tag, report))
        logger.info("[experiment] %s: %s", tag, report.format())

    with _stage("write"):
        title = f"{provenance.comment()}\n# {cfg.name}: {cfg.descriptor}, {cfg.classifier}, {len(plan)} thresholds"
        result.summary = atomic_write_text(out / "summary.txt", format_table(rows, title=title))
        if cfg.profile_threshold is not None:
            result.profiles = write_profiles(contours, cfg.profile_threshold, plan.mode, out / "profiles",
                                             provenance, cfg.disconnected_distance)
    return result


def write_profiles(contours: Sequence[Contour], t: float, mode: Union[Mode, str], folder: PathLike,
                   provenance: Optional[Provenance] = None,
                   disconnected_distance: Optional[int] = None) -> list[Path]:
    """Per-node profile CSV of every contour at threshold t, nodes in contour order."""
    folder = Path(folder)
    written = []
    for index, contour in enumerate(contours):
        _, profile = measure_all(threshold(build_weighted(contour), t, mode), disconnected_distance)
        name = (contour.id or f"shape_{index:04d}").replace("/", "__")
        written.append(write_profile(folder / f"{name}.csv", profile, provenance))
    return written


# ============================================================
# STUDIES
# ============================================================

@dataclass(frozen=True)
class StudyRow:
    """One accuracy figure of a study."""

    descriptor: str
    mode: Mode
    n_thresholds: int
    threshold: Optional[float]  # set for single-threshold rows
    report: AccuracyReport

    @property
    def name(self) -> str:
        where = "full" if self.threshold is None else f"T={self.threshold:.3f}"
        return f"{self.descriptor} {self.mode.short} n_T={self.n_thresholds} {where}"


def sweep_study(contours: Sequence[Contour], n_thresholds_grid: Sequence[int] = DEFAULT_SWEEP_GRID,
                descriptors: Sequence[str] = ("phi", "varphi"),
                modes: Sequence[Union[Mode, str]] = (Mode.SMALLER_THAN,),
                classifier: str = "knn:1", folds: int = 10, repeats: int = 100, seed: int = 0,
                scale: bool = True, jobs: int = 1) -> list[StudyRow]:
    """Accuracy of every (n_T, descriptor, mode) combination with equally spaced thresholds."""
    _require_labels(contours)
    rows = []
    for n_t in n_thresholds_grid:
        for mode in (Mode.parse(m) for m in modes):
            plan = SweepPlan.equally_spaced(n_t, mode)
            for kind in descriptors:
                data = LabeledDataset.from_vectors(extract_dataset(contours, kind, plan, jobs=jobs))
                report = cross_validate(data, classifier, folds, repeats, seed, scale, jobs)
                rows.append(StudyRow(kind, mode, n_t, None, report))
                logger.info("[experiment] sweep %s: %s", rows[-1].name, report.format())
    return rows


def _column_slice(data: LabeledDataset, index: int) -> LabeledDataset:
    layout = data.layout
    width = len(layout.measurements)
    kind = "single_t" if layout.kind == "phi" and layout.measurements == MEASUREMENT_NAMES else layout.kind
    sliced = DescriptorLayout(kind, (layout.thresholds[index],), layout.mode, layout.measurements)
    return LabeledDataset(data.features[:, index * width:(index + 1) * width], data.labels, sliced, data.ids)


def single_threshold_study(contours: Sequence[Contour], n_thresholds: int = 13, descriptor: str = "phi",
                           mode: Union[Mode, str] = Mode.SMALLER_THAN, classifier: str = "knn:1", folds: int = 10,
                           repeats: int = 100, seed: int = 0, scale: bool = True, jobs: int = 1) -> list[StudyRow]:
    """
    Accuracy of the measurement tuple at each threshold on its own, then of
    the full sweep (last row, threshold None).

    The per-threshold tuples are the column blocks of the full-sweep
    descriptor, which equal extract_single() at that threshold.
    """
    _require_labels(contours)
    mode = Mode.parse(mode)
    plan = SweepPlan.equally_spaced(n_thresholds, mode)
    full = LabeledDataset.from_vectors(extract_dataset(contours, descriptor, plan, jobs=jobs))
    rows = []
    for index, t in enumerate(plan.thresholds):
        report = cross_validate(_column_slice(full, index), classifier, folds, repeats, seed, scale, jobs)
        rows.append(StudyRow(descriptor, mode, n_thresholds, t, report))
        logger.info("[experiment] single %s: %s", rows[-1].name, report.format())
    report = cross_validate(full, classifier, folds, repeats, seed, scale, jobs)
    rows.append(StudyRow(descriptor, mode, n_thresholds, None, report))
    return rows


STUDY_COLUMNS = ("descriptor", "mode", "n_thresholds", "threshold", "mean_accuracy", "std_dev")


def write_study(out_dir: PathLike, name: str, rows: Sequence[StudyRow], provenance: Provenance) -> tuple[Path, Path]:
    """`<name>.csv` (tidy rows) and `<name>.txt` (mean +/- std table)."""
    out = Path(out_dir)
    csv_rows = (
        [r.descriptor, r.mode.value, r.n_thresholds, "" if r.threshold is None else r.threshold,
         r.report.mean_accuracy, r.report.std_dev]
        for r in rows
    )
    csv_path = write_csv(out / f"{name}.csv", STUDY_COLUMNS, csv_rows, provenance)
    table = format_table([(r.name, r.report) for r in rows], title=provenance.comment())
    return csv_path, atomic_write_text(out / f"{name}.txt", table)


# ============================================================
# FIGURE DATA
# ============================================================

def interpolation_series(a: Contour, b: Contour, steps: int) -> list[tuple[float, Contour]]:
    """`steps` + 1 contours from a (alpha 0) to b (alpha 1)."""
    if steps < 1:
        raise ExperimentError("interpolate", f"steps must be >= 1, got {steps}")
    return [(k / steps, interpolate(a, b, k / steps)) for k in range(steps + 1)]


def interpolation_curves(a: Contour, b: Contour, steps: int,
                         plan: SweepPlan) -> list[tuple[float, float, float, float]]:
    """Rows (alpha, threshold, <cc>, <l>) along the blend from a to b."""
    rows = []
    for alpha, contour in interpolation_series(a, b, steps):
        for measured in sweep_measurements(contour, plan):
            rows.append((alpha, measured.threshold, measured.avg_clustering, measured.avg_path_length))
    return rows


def sweep_measurements(contour: Contour, plan: SweepPlan,
                       disconnected_distance: Optional[int] = None) -> list[MeasurementSet]:
    """MeasurementSet at every threshold of the plan."""
    wnet = build_weighted(canonical_start(contour))
    return [measure_all(graph, disconnected_distance)[0] for graph in sweep(wnet, plan)]


def measurement_curves(contours: Sequence[Contour], plan: SweepPlan,
                       disconnected_distance: Optional[int] = None) -> list[tuple[str, MeasurementSet]]:
    """(shape name, MeasurementSet) for every contour and threshold."""
    rows = []
    for index, contour in enumerate(contours):
        name = contour.label or contour.id or f"shape_{index:04d}"
        rows.extend((name, m) for m in sweep_measurements(contour, plan, disconnected_distance))
    return rows


def write_measurement_curves(path: PathLike, contours: Sequence[Contour], plan: SweepPlan,
                             provenance: Optional[Provenance] = None,
                             disconnected_distance: Optional[int] = None) -> Path:
    return write_measurements(path, measurement_curves(contours, plan, disconnected_distance), provenance)
