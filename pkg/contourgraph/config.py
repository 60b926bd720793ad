"""
Configuration Management for contourgraph

Two layers:

1. Config - process-wide settings from environment variables. A `.env`
   file at the project root is loaded first (python-dotenv), so local
   defaults can live there without exporting anything.
2. ExperimentConfig - everything one experiment run needs (descriptor,
   thresholds, classifier, folds, dataset, perturbation grid). It
   round-trips through JSON and is embedded in every output it produces.

Environment variables:
    CONTOURGRAPH_SEED       seed fallback for every command (default 0)
    CONTOURGRAPH_JOBS       worker threads (default 1)
    CONTOURGRAPH_LOG_LEVEL  logging level for the CLI (default WARNING)
    CONTOURGRAPH_OUT        default output directory (default results)
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from dotenv import load_dotenv

from contourgraph.errors import ConfigError, ContourGraphError
from contourgraph.exports import atomic_write_text
from contourgraph.metrics import MEASUREMENT_NAMES
from contourgraph.network import Mode, SweepPlan, default_thresholds
from contourgraph.shapes import PerturbSpec

logger = logging.getLogger(__name__)

# The .env file lives in the project root, next to pyproject.toml
project_root = Path(__file__).parent.parent
env_path = project_root / ".env"

# Missing .env is fine; load_dotenv then does nothing
load_dotenv(dotenv_path=env_path)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _int_setting(environ: Mapping[str, str], name: str, default: int, minimum: int) -> int:
    raw = environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


class Config:
    """
    Settings loaded from environment variables.

    Access settings like:
        from contourgraph.config import config
        seed = config.SEED
    """

    def __init__(self, environ: Optional[Mapping[str, str]] = None):
        """
        Load all settings.

        Args:
            environ: Mapping to read instead of os.environ (used by tests)
        """
        environ = os.environ if environ is None else environ

        self.SEED = _int_setting(environ, "CONTOURGRAPH_SEED", 0, 0)
        self.JOBS = _int_setting(environ, "CONTOURGRAPH_JOBS", 1, 1)

        level = environ.get("CONTOURGRAPH_LOG_LEVEL", "WARNING").strip().upper()
        if level not in LOG_LEVELS:
            raise ConfigError(f"CONTOURGRAPH_LOG_LEVEL must be one of {LOG_LEVELS}, got {level!r}")
        self.LOG_LEVEL = level

        self.OUT_DIR = Path(environ.get("CONTOURGRAPH_OUT", "results"))

        # Path to .env file (for debugging)
        self.ENV_PATH = env_path

    def __repr__(self):
        return (
            f"Config(\n"
            f"  SEED={self.SEED},\n"
            f"  JOBS={self.JOBS},\n"
            f"  LOG_LEVEL={self.LOG_LEVEL},\n"
            f"  OUT_DIR={self.OUT_DIR},\n"
            f"  ENV_PATH={self.ENV_PATH}\n"
            f")"
        )


# Singleton used by the CLI; a malformed variable falls back to defaults
try:
    config = Config()
except ConfigError as e:
    logger.warning("[config] %s; using defaults", e)
    config = Config(environ={})


# ============================================================
# EXPERIMENT CONFIG
# ============================================================

@dataclass(frozen=True)
class SyntheticSpec:
    """Generated jittered geometric dataset."""

    n_per_class: int = 25
    noise_level: int = 1
    n_samples: int = 120


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One experiment: dataset, descriptor, classifier and perturbation grid.

    Exactly one of `dataset` (directory) and `synthetic` is set.
    `thresholds`, when given, wins over `n_thresholds`.
    """

    name: str = "experiment"
    descriptor: str = "phi"
    mode: Mode = Mode.SMALLER_THAN
    thresholds: Optional[tuple[float, ...]] = None
    n_thresholds: int = 13
    measurements: tuple[str, ...] = MEASUREMENT_NAMES
    classifier: str = "knn:1"
    folds: int = 10
    repeats: int = 100
    seed: int = 0
    scale: bool = True
    dataset: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None
    perturbations: tuple[PerturbSpec, ...] = ()
    profile_threshold: Optional[float] = None
    disconnected_distance: Optional[int] = None
    skip_bad: bool = False
    jobs: int = field(default=1, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.thresholds is not None:
            object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        object.__setattr__(self, "measurements", tuple(self.measurements))
        object.__setattr__(self, "perturbations", tuple(self.perturbations))
        if self.descriptor not in ("phi", "varphi"):
            raise ConfigError(f"descriptor must be phi or varphi, got {self.descriptor!r}")
        if (self.dataset is None) == (self.synthetic is None):
            raise ConfigError("Set exactly one of dataset and synthetic")
        unknown = [m for m in self.measurements if m not in MEASUREMENT_NAMES]
        if unknown or not self.measurements:
            raise ConfigError(
                f"measurements must be a non-empty subset of {MEASUREMENT_NAMES}, got {self.measurements}"
            )
        if self.folds < 2 or self.repeats < 1 or self.jobs < 1:
            raise ConfigError("folds must be >= 2, repeats >= 1 and jobs >= 1")
        try:
            self.plan()
        except ContourGraphError as e:
            raise ConfigError(f"Invalid thresholds: {e}") from e

    def resolved_thresholds(self) -> tuple[float, ...]:
        if self.thresholds is not None:
            return self.thresholds
        return default_thresholds(self.n_thresholds)

    def plan(self) -> SweepPlan:
        return SweepPlan(self.resolved_thresholds(), self.mode)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["mode"] = self.mode.value
        data["thresholds"] = list(self.resolved_thresholds())
        data["measurements"] = list(self.measurements)
        data["perturbations"] = [p.to_dict() for p in self.perturbations]
        data.pop("jobs")
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown config fields: {sorted(unknown)}")
        try:
            if data.get("synthetic") is not None:
                data["synthetic"] = SyntheticSpec(**data["synthetic"])
            if data.get("thresholds") is not None:
                data["thresholds"] = tuple(data["thresholds"])
            if "measurements" in data:
                data["measurements"] = tuple(data["measurements"])
            data["perturbations"] = tuple(PerturbSpec.from_dict(p) for p in data.get("perturbations", ()))
            return cls(**data)
        except (TypeError, ContourGraphError) as e:
            raise ConfigError(f"Invalid experiment config: {e}") from e

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form (short, 16 hex digits)."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def load(cls, path: Union[str, Path], default_seed: Optional[int] = None) -> "ExperimentConfig":
        """
        Read a JSON config file.

        Args:
            path: Config file
            default_seed: Seed used when the file has no `seed` entry
        """
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read experiment config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Experiment config {path} must hold a JSON object")
        if "seed" not in data and default_seed is not None:
            data["seed"] = default_seed
        return cls.from_dict(data)

    def save(self, path: Union[str, Path]) -> Path:
        return atomic_write_text(path, self.to_json() + "\n")

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with the non-None overrides applied (CLI flags)."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        if changes.get("thresholds") is not None:
            changes["thresholds"] = tuple(changes["thresholds"])
        elif "n_thresholds" in changes:
            changes["thresholds"] = None
        return replace(self, **changes)
