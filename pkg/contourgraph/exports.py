"""
Writers for every artifact the pipeline leaves on disk.

All files are tidy CSV or JSON meant for external plotting; nothing here
draws. Writes are atomic: the content goes to a temporary file in the
target directory which is then renamed over the destination, so a crashed
run never leaves a half-written file behind.

Files produced by a configured run start with a provenance comment:

    # contourgraph version=0.1.0 config_hash=3f2a... seed=7

Floats are written with repr(), which round-trips exactly, so rerunning the
same config produces byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Mapping, Optional, Sequence, Union

from contourgraph import __version__
from contourgraph.errors import ContourGraphError

if TYPE_CHECKING:
    from contourgraph.classify import AccuracyReport
    from contourgraph.curvature import CurvatureSignal
    from contourgraph.descriptor import FeatureVector
    from contourgraph.metrics import MeasurementSet, NodeProfile

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

PROFILE_COLUMNS = ("node", "k", "cc", "b", "k2", "k3")
MEASUREMENT_COLUMNS = ("shape", "mode", "threshold", "k", "kmax", "k2", "k3", "cc", "l", "rho", "b")


@dataclass(frozen=True)
class Provenance:
    """Config hash and seed stamped on every output of a run."""

    config_hash: str
    seed: int

    def comment(self) -> str:
        return f"# contourgraph version={__version__} config_hash={self.config_hash} seed={self.seed}"

    def to_dict(self) -> dict:
        return {"version": __version__, "config_hash": self.config_hash, "seed": self.seed}

    @classmethod
    def for_params(cls, params: Mapping[str, Any], seed: int = 0) -> "Provenance":
        """Provenance of a standalone command, hashed from its parameters."""
        return cls(params_hash(params), seed)


def params_hash(params: Mapping[str, Any]) -> str:
    canonical = json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def fmt(value: Any) -> str:
    """Exact text form of a number; other values pass through str()."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ============================================================
# LOW-LEVEL WRITERS
# ============================================================

def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Write text to path through a temporary file and a rename.

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(temp_name, path)
    except OSError as e:
        Path(temp_name).unlink(missing_ok=True)
        raise ContourGraphError(f"Cannot write {path}: {e}") from e
    logger.debug("[exports] wrote %s", path)
    return path


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]],
              provenance: Optional[Provenance] = None) -> Path:
    """Tidy CSV with an optional provenance comment above the header row."""
    buffer = io.StringIO()
    if provenance is not None:
        buffer.write(provenance.comment() + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(value) for value in row])
    return atomic_write_text(path, buffer.getvalue())


def write_json(path: PathLike, data: Mapping[str, Any]) -> Path:
    return atomic_write_text(path, json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n")


# ============================================================
# DOMAIN ARTIFACTS
# ============================================================

def sidecar_path(features_path: PathLike) -> Path:
    return Path(features_path).with_suffix(".json")


def write_features(path: PathLike, vectors: Sequence["FeatureVector"], provenance: Provenance,
                   config: Optional[Mapping[str, Any]] = None) -> Path:
    """
    Feature CSV (one row per shape, `id`, descriptor columns, `label`) plus a
    JSON sidecar with the layout, software version, seed and config.
    """
    if not vectors:
        raise ContourGraphError("No feature vectors to write")
    layout = vectors[0].layout
    header = ["id", *layout.column_names(), "label"]
    rows = [[v.id or "", *(float(x) for x in v.values), v.label or ""] for v in vectors]
    written = write_csv(path, header, rows, provenance)
    sidecar = {
        **provenance.to_dict(),
        "layout": layout.to_dict(),
        "n_vectors": len(vectors),
        "config": dict(config) if config is not None else None,
    }
    write_json(sidecar_path(path), sidecar)
    return written


def write_profile(path: PathLike, profile: "NodeProfile", provenance: Optional[Provenance] = None,
                  curvature: Optional["CurvatureSignal"] = None) -> Path:
    """Per-node measurements `node,k,cc,b,k2,k3` (plus `curvature` when given)."""
    header = list(PROFILE_COLUMNS)
    columns = [profile.degree, profile.clustering, profile.betweenness, profile.hier_degree_2, profile.hier_degree_3]
    if curvature is not None:
        if len(curvature) != len(profile):
            raise ContourGraphError(f"Curvature has {len(curvature)} values, profile has {len(profile)} nodes")
        header.append("curvature")
        columns.append(curvature.values)
    rows = (
        [node, *(_scalar(column[node]) for column in columns)]
        for node in range(len(profile))
    )
    return write_csv(path, header, rows, provenance)


def _scalar(value: Any) -> Union[int, float]:
    return value.item() if hasattr(value, "item") else value


def write_curvature(path: PathLike, signal: "CurvatureSignal", provenance: Optional[Provenance] = None) -> Path:
    """`index,curvature`, aligned with the profile CSV of the same contour."""
    rows = ([index, float(value)] for index, value in enumerate(signal.values))
    return write_csv(path, ("index", "curvature"), rows, provenance)


def measurement_row(shape: str, measured: "MeasurementSet") -> list[Any]:
    return [
        shape, measured.mode.value, measured.threshold,
        *(measured.value(name) for name in MEASUREMENT_COLUMNS[3:]),
    ]


def write_measurements(path: PathLike, rows: Iterable[tuple[str, "MeasurementSet"]],
                       provenance: Optional[Provenance] = None) -> Path:
    """Every MeasurementSet field per (shape, threshold)."""
    return write_csv(path, MEASUREMENT_COLUMNS, (measurement_row(s, m) for s, m in rows), provenance)


def format_table(rows: Sequence[tuple[str, "AccuracyReport"]], title: str = "") -> str:
    """Plain-text accuracy table, one `name  mean ± std` line per report."""
    width = max([len(name) for name, _ in rows] + [len("setting")])
    lines = [title] if title else []
    lines.append(f"{'setting':<{width}}  accuracy (%)")
    lines.append("-" * (width + 16))
    lines.extend(f"{name:<{width}}  {report.format()}" for name, report in rows)
    return "\n".join(lines) + "\n"


def write_report(stem: PathLike, report: "AccuracyReport", provenance: Provenance,
                 name: str = "", config: Optional[Mapping[str, Any]] = None) -> tuple[Path, Path]:
    """
    Report as `<stem>.json` (everything) and `<stem>.txt` (the table line).

    Returns:
        (json path, text path)
    """
    stem = Path(stem)
    data = {
        **provenance.to_dict(),
        "name": name,
        "report": report.to_dict(),
        "config": dict(config) if config is not None else None,
    }
    json_path = write_json(stem.with_name(f"{stem.name}.json"), data)
    table = format_table([(name or stem.name, report)], title=provenance.comment())
    text_path = atomic_write_text(stem.with_name(f"{stem.name}.txt"), table)
    return json_path, text_path
