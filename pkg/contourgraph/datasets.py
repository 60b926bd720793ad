"""
Dataset plumbing: contour files, silhouettes, feature files and the
generated geometric dataset.

Contour file (CSV), one `x,y` pair per line along the boundary, closed
implicitly, with an optional label header:

    # label=circle
    100.0,0.0
    99.86,5.23
    ...

Silhouettes are PBM or PGM images; foreground is every nonzero sample of
the file (for PBM, the 1 bits).

Dataset directory: every .csv / .pbm / .pgm file below the root, read in
lexicographic order of the relative path. The class label comes from the
`# label=` header when present, else from the immediate subdirectory name.
"""

from __future__ import annotations

import json
import logging
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence, Union

import cv2
import numpy as np
import pandas as pd

from contourgraph.classify import LabeledDataset
from contourgraph.descriptor import DescriptorLayout
from contourgraph.errors import ContourGraphError, DatasetError
from contourgraph.exports import Provenance, atomic_write_text, fmt, sidecar_path
from contourgraph.shapes import Contour, PerturbSpec, ShapeSpec, generate_shape, perturb, resample, trace_boundary

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CONTOUR_SUFFIXES = (".csv",)
IMAGE_SUFFIXES = (".pbm", ".pgm")
LABEL_PREFIX = "label="


# ============================================================
# CONTOUR FILES
# ============================================================

def _parse_label(comment: str) -> Optional[str]:
    for token in comment.lstrip("#").split():
        if token.startswith(LABEL_PREFIX):
            return token[len(LABEL_PREFIX):] or None
    return None


def read_contour_csv(path: PathLike) -> Contour:
    """
    Read an `x,y` contour file.

    Raises:
        DatasetError: unreadable file, malformed line or invalid contour
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DatasetError(f"{path}: cannot read ({e})") from e

    label = None
    points = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            label = _parse_label(line) or label
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DatasetError(f"{path}:{number}: expected `x,y`, got {line!r}")
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise DatasetError(f"{path}:{number}: non-numeric coordinate in {line!r}") from None
    try:
        return Contour(np.array(points, dtype=np.float64).reshape(-1, 2), label=label, id=path.stem)
    except ContourGraphError as e:
        raise DatasetError(f"{path}: {e}") from e


def write_contour_csv(path: PathLike, contour: Contour, provenance: Optional[Provenance] = None) -> Path:
    """Write a contour file; the label header is written when the contour has a label."""
    lines = []
    if provenance is not None:
        lines.append(provenance.comment())
    if contour.label:
        lines.append(f"# {LABEL_PREFIX}{contour.label}")
    lines.extend(f"{fmt(float(x))},{fmt(float(y))}" for x, y in contour.points)
    return atomic_write_text(path, "\n".join(lines) + "\n")


# ============================================================
# SILHOUETTES
# ============================================================

def read_image(path: PathLike) -> Contour:
    """
    Trace the outer boundary of a PBM/PGM silhouette.

    Raises:
        DatasetError: unreadable image or not exactly one foreground component
    """
    path = Path(path)
    image = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if image is None:
        raise DatasetError(f"{path}: cannot decode image")
    if image.ndim == 3:
        image = image.max(axis=2)
    if path.suffix.lower() == ".pbm":
        # OpenCV decodes PBM 1 bits (ink) as black
        mask = image == 0
    else:
        mask = image > 0
    try:
        contour = trace_boundary(mask)
    except ContourGraphError as e:
        raise DatasetError(f"{path}: {e}") from e
    return Contour(contour.points, id=path.stem)


def write_image(path: PathLike, mask: np.ndarray) -> Path:
    """Save a boolean silhouette as 8-bit PGM (foreground 255)."""
    path = Path(path)
    if path.suffix.lower() != ".pgm":
        raise DatasetError(f"{path}: silhouettes are written as .pgm")
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)):
        raise DatasetError(f"{path}: cannot encode image")
    return path


def read_shape_file(path: PathLike) -> Contour:
    """Read a contour CSV or a silhouette, by suffix."""
    suffix = Path(path).suffix.lower()
    if suffix in CONTOUR_SUFFIXES:
        return read_contour_csv(path)
    if suffix in IMAGE_SUFFIXES:
        return read_image(path)
    raise DatasetError(f"{path}: unsupported file type {suffix!r}; use .csv, .pbm or .pgm")


# ============================================================
# DATASET DIRECTORIES
# ============================================================

def load_dataset(path: PathLike, skip_bad: bool = False) -> list[Contour]:
    """
    Read every contour file below a directory.

    Args:
        path: Dataset root
        skip_bad: Log and skip malformed files instead of aborting

    Returns:
        Contours in lexicographic order of their relative path, with the
        relative path (without suffix) as id

    Raises:
        DatasetError: not a directory, no usable file, or a bad file when
            skip_bad is False
    """
    root = Path(path)
    if not root.is_dir():
        raise DatasetError(f"{root}: not a directory")
    suffixes = CONTOUR_SUFFIXES + IMAGE_SUFFIXES
    files = sorted(
        (p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in suffixes),
        key=lambda p: p.relative_to(root).as_posix(),
    )
    if not files:
        raise DatasetError(f"{root}: no .csv, .pbm or .pgm files found")

    contours = []
    for file in files:
        relative = file.relative_to(root)
        try:
            contour = read_shape_file(file)
        except DatasetError as e:
            if not skip_bad:
                raise
            logger.warning("[datasets] skipping %s", e)
            continue
        label = contour.label or (relative.parent.name if relative.parent != Path(".") else None)
        contours.append(Contour(contour.points, label=label, id=relative.with_suffix("").as_posix()))

    if not contours:
        raise DatasetError(f"{root}: every file was skipped")
    logger.info("[datasets] loaded %d contours from %s", len(contours), root)
    return contours


def save_dataset(path: PathLike, contours: Sequence[Contour], provenance: Optional[Provenance] = None) -> list[Path]:
    """Write contours as `<root>/<label>/<name>.csv`, the layout load_dataset reads back."""
    root = Path(path)
    written = []
    for index, contour in enumerate(contours):
        name = Path(contour.id).name if contour.id else f"shape_{index:04d}"
        folder = root / contour.label if contour.label else root
        written.append(write_contour_csv(folder / f"{name}.csv", contour, provenance))
    return written


# ============================================================
# FEATURE FILES
# ============================================================

def read_features(path: PathLike) -> LabeledDataset:
    """
    Read a feature CSV and its JSON sidecar back into a LabeledDataset.

    Raises:
        DatasetError: missing sidecar, header not matching the layout, or
            malformed values
    """
    path = Path(path)
    try:
        sidecar = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
        layout = DescriptorLayout.from_dict(sidecar["layout"])
        # text cells keep ids and labels verbatim and floats exact
        table = pd.read_csv(path, comment="#", dtype=str, keep_default_na=False)
    except (OSError, KeyError, ValueError, ContourGraphError) as e:
        raise DatasetError(f"{path}: cannot read features ({e})") from e

    columns = layout.column_names()
    if list(table.columns) != ["id", *columns, "label"]:
        raise DatasetError(f"{path}: header does not match the layout in {sidecar_path(path).name}")
    missing = table.isna().to_numpy().any(axis=1)
    if missing.any():
        rows = (np.flatnonzero(missing) + 1).tolist()
        raise DatasetError(f"{path}: missing values in data rows {rows}")
    try:
        features = table[columns].to_numpy(dtype=np.float64)
    except ValueError as e:
        raise DatasetError(f"{path}: non-numeric feature value ({e})") from e
    ids = tuple(value or None for value in table["id"])
    try:
        return LabeledDataset(features, table["label"].tolist(), layout, ids)
    except ContourGraphError as e:
        raise DatasetError(f"{path}: {e}") from e


# ============================================================
# GENERATED GEOMETRIC DATASET
# ============================================================

def _geometric_classes() -> dict[str, ShapeSpec]:
    return {
        "circle": ShapeSpec("circle"),
        "triangle": ShapeSpec("regular_polygon", 3),
        "square": ShapeSpec("regular_polygon", 4),
        "pentagon": ShapeSpec("regular_polygon", 5),
        "hexagon": ShapeSpec("regular_polygon", 6),
        "star3": ShapeSpec("star", 3, inner_radius_ratio=0.45),
        "star4": ShapeSpec("star", 4, inner_radius_ratio=0.45),
        "star5": ShapeSpec("star", 5, inner_radius_ratio=0.45),
        "star6": ShapeSpec("star", 6, inner_radius_ratio=0.5),
        "star8": ShapeSpec("star", 8, inner_radius_ratio=0.55),
    }


# Ten outline families of the desk-scale classification dataset
GEOMETRIC_CLASSES: dict[str, ShapeSpec] = _geometric_classes()

RADIUS_RANGE = (80.0, 120.0)
# per-sample free-hand variation: stretch along one axis, corner radii and
# angles moved by a fraction of the radius and of the corner spacing
ASPECT_RANGE = (1.0, 1.15)
CORNER_RADIUS_JITTER = 0.06
CORNER_ANGLE_JITTER = 0.04
INNER_RATIO_JITTER = 0.05


def _freehand_outline(template: ShapeSpec, radius: float, rng: np.random.Generator) -> Contour:
    spec = replace(template, radius=radius)
    if spec.kind == "circle":
        outline = generate_shape(spec).points
    else:
        if spec.kind == "star":
            ratio = spec.inner_radius_ratio + rng.uniform(-INNER_RATIO_JITTER, INNER_RATIO_JITTER)
            spec = replace(spec, inner_radius_ratio=float(ratio))
        corners = spec.vertices()
        m = len(corners)
        angles = np.arctan2(corners[:, 1], corners[:, 0])
        angles = angles + rng.uniform(-1.0, 1.0, m) * CORNER_ANGLE_JITTER * 2.0 * np.pi / m
        radii = np.hypot(corners[:, 0], corners[:, 1])
        radii = radii * (1.0 + rng.uniform(-CORNER_RADIUS_JITTER, CORNER_RADIUS_JITTER, m))
        corners = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
        outline = resample(Contour(corners), spec.n_samples).points
    aspect = float(rng.uniform(*ASPECT_RANGE))
    return Contour(outline * np.array([aspect, 1.0]))


def synthetic_dataset(n_per_class: int = 25, noise_level: int = 1, n_samples: int = 120, seed: int = 0,
                      classes: Optional[Sequence[str]] = None) -> list[Contour]:
    """
    Jittered geometric dataset: each sample is a free-hand version of a class
    outline (stretched, with displaced corners and, for stars, a varied
    inner radius) with a random radius, a random rotation and integer point
    noise.

    Args:
        n_per_class: Samples per class
        noise_level: Noise amplitude in pixels (0 disables noise)
        n_samples: Points per contour
        seed: Seed; the same arguments always give the same contours
        classes: Subset of GEOMETRIC_CLASSES names (default all ten)

    Returns:
        Labelled contours sorted by class name, ids `<class>/<class>_<index>`;
        save_dataset() and load_dataset() give them back in the same order
    """
    names = sorted(GEOMETRIC_CLASSES if classes is None else classes)
    unknown = [name for name in names if name not in GEOMETRIC_CLASSES]
    if unknown:
        raise DatasetError(f"Unknown geometric classes {unknown}; choose from {list(GEOMETRIC_CLASSES)}")
    if n_per_class < 1:
        raise DatasetError(f"n_per_class must be positive, got {n_per_class}")

    rng = np.random.default_rng(seed)
    contours = []
    for name in names:
        template = replace(GEOMETRIC_CLASSES[name], n_samples=n_samples)
        for index in range(n_per_class):
            radius = float(rng.uniform(*RADIUS_RANGE))
            angle = float(rng.uniform(0.0, 360.0))
            noise_seed = int(rng.integers(2**32))
            contour = _freehand_outline(template, radius, rng)
            contour = perturb(contour, PerturbSpec("rotate", angle_deg=angle))
            contour = perturb(contour, PerturbSpec("noise", noise_level=noise_level, seed=noise_seed))
            contours.append(Contour(contour.points, label=name, id=f"{name}/{name}_{index:03d}"))
    logger.info("[datasets] generated %d contours in %d classes", len(contours), len(names))
    return contours
