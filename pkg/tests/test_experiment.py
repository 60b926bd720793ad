"""
Tests for the experiment pipeline and the study drivers.
"""

import json

import numpy as np
import pytest

from contourgraph.classify import LabeledDataset, cross_validate
from contourgraph.config import ExperimentConfig
from contourgraph.datasets import save_dataset, synthetic_dataset
from contourgraph.descriptor import extract_single
from contourgraph.errors import ExperimentError
from contourgraph.experiment import (
    STUDY_COLUMNS,
    extract_dataset,
    interpolation_curves,
    interpolation_series,
    measurement_curves,
    perturb_dataset,
    run_experiment,
    single_threshold_study,
    sweep_study,
    write_profiles,
    write_study,
)
from contourgraph.exports import Provenance
from contourgraph.network import SweepPlan
from contourgraph.shapes import Contour, PerturbSpec, reference_shape

CV = dict(folds=5, repeats=5)


@pytest.fixture
def two_classes():
    return synthetic_dataset(n_per_class=10, n_samples=60, seed=1, classes=["circle", "star5"])


@pytest.fixture
def dataset_dir(tmp_path, two_classes):
    root = tmp_path / "data"
    save_dataset(root, two_classes)
    return root


def config_for(dataset_dir, **changes):
    return ExperimentConfig(name="test", dataset=str(dataset_dir), n_thresholds=7, **{**CV, **changes})


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestRunExperiment:
    """Tests for run_experiment."""

    def test_separable_classes(self, tmp_path, dataset_dir):
        result = run_experiment(config_for(dataset_dir), tmp_path / "out")
        report = result.reports["original"]
        assert report.mean_accuracy == 100.0
        assert report.std_dev == 0.0
        out = tmp_path / "out"
        for name in ("config.json", "features.csv", "features.json", "report.json", "report.txt", "summary.txt"):
            assert (out / name).is_file()
        assert "100.00 ± 0.00" in (out / "summary.txt").read_text(encoding="utf-8")

    def test_reruns_are_byte_identical(self, tmp_path, dataset_dir):
        cfg = config_for(dataset_dir, perturbations=(PerturbSpec("noise", noise_level=2, seed=4),))
        run_experiment(cfg, tmp_path / "a")
        run_experiment(cfg.with_overrides(jobs=3), tmp_path / "b")
        assert tree(tmp_path / "a") == tree(tmp_path / "b")

    def test_saved_config_reproduces_hash(self, tmp_path, dataset_dir):
        cfg = config_for(dataset_dir, seed=12)
        result = run_experiment(cfg, tmp_path / "out")
        again = ExperimentConfig.load(tmp_path / "out" / "config.json")
        assert again.config_hash() == result.provenance.config_hash == cfg.config_hash()
        sidecar = json.loads((tmp_path / "out" / "features.json").read_text())
        assert sidecar["config_hash"] == cfg.config_hash()
        assert sidecar["seed"] == 12

    def test_rotation_grid(self, tmp_path, dataset_dir):
        angles = (35.0, 104.0, 201.0, 298.0)
        cfg = config_for(dataset_dir, perturbations=tuple(PerturbSpec("rotate", angle_deg=a) for a in angles))
        result = run_experiment(cfg, tmp_path / "out")
        assert list(result.reports) == ["rotate_35", "rotate_104", "rotate_201", "rotate_298"]
        for tag in result.reports:
            assert (tmp_path / "out" / f"report_{tag}.json").is_file()
            assert (tmp_path / "out" / f"features_{tag}.csv").is_file()
        summary = (tmp_path / "out" / "summary.txt").read_text(encoding="utf-8")
        assert all(tag in summary for tag in result.reports)

    def test_degradation_tags_keep_their_dots(self, tmp_path, dataset_dir):
        cfg = config_for(dataset_dir, perturbations=(PerturbSpec("degrade_random", degrade_fraction=0.2),))
        run_experiment(cfg, tmp_path / "out")
        assert (tmp_path / "out" / "report_degrade_random_0.2.json").is_file()
        assert (tmp_path / "out" / "report_degrade_random_0.2.txt").is_file()

    def test_profiles(self, tmp_path, dataset_dir):
        result = run_experiment(config_for(dataset_dir, profile_threshold=0.3), tmp_path / "out")
        assert len(result.profiles) == 20
        first = result.profiles[0]
        assert first.name == "circle__circle_000.csv"
        lines = first.read_text(encoding="utf-8").splitlines()
        assert lines[1] == "node,k,cc,b,k2,k3"
        assert len(lines) == 2 + 60

    def test_missing_dataset_fails_in_load(self, tmp_path):
        cfg = config_for(tmp_path / "nowhere")
        with pytest.raises(ExperimentError) as info:
            run_experiment(cfg, tmp_path / "out")
        assert info.value.stage == "load"

    def test_unlabeled_contours_fail_in_load(self, tmp_path):
        root = tmp_path / "flat"
        save_dataset(root, [Contour(reference_shape(name, 40).points, id=name) for name in ("square", "circle")])
        with pytest.raises(ExperimentError) as info:
            run_experiment(config_for(root), tmp_path / "out")
        assert info.value.stage == "load"

    def test_small_classes_fail_in_classify(self, tmp_path, dataset_dir):
        with pytest.raises(ExperimentError) as info:
            run_experiment(config_for(dataset_dir, folds=11), tmp_path / "out")
        assert info.value.stage == "classify"

    def test_heavy_degradation_fails_in_perturb(self, tmp_path, dataset_dir):
        cfg = config_for(dataset_dir, perturbations=(PerturbSpec("degrade_random", degrade_fraction=0.99),))
        with pytest.raises(ExperimentError) as info:
            run_experiment(cfg, tmp_path / "out")
        assert info.value.stage == "perturb"
        assert "fewer than 3" in info.value.message


class TestPipelinePieces:
    """Tests for perturb_dataset and extract_dataset."""

    def test_perturbation_seeds_differ_per_contour(self):
        contours = [reference_shape("circle", 60)] * 3
        noisy = perturb_dataset(contours, PerturbSpec("noise", noise_level=2), seed=5)
        assert not np.array_equal(noisy[0].points, noisy[1].points)
        again = perturb_dataset(contours, PerturbSpec("noise", noise_level=2), seed=5)
        assert all(np.array_equal(a.points, b.points) for a, b in zip(noisy, again))

    def test_extraction_is_independent_of_jobs(self, two_classes):
        plan = SweepPlan.equally_spaced(4)
        serial = extract_dataset(two_classes, "phi", plan)
        threaded = extract_dataset(two_classes, "phi", plan, jobs=3)
        assert [v.id for v in serial] == [v.id for v in threaded]
        assert all(np.array_equal(a.values, b.values) for a, b in zip(serial, threaded))


class TestStudies:
    """Tests for the sweep and single-threshold studies."""

    def test_sweep_study_grid(self, two_classes):
        rows = sweep_study(two_classes, (4, 2), ("phi", "varphi"), ("lt", "gt"), **CV)
        assert len(rows) == 2 * 2 * 2
        assert rows[0].name == "phi lt n_T=4 full"
        assert {row.n_thresholds for row in rows} == {4, 2}

    def test_single_threshold_rows(self, two_classes):
        rows = single_threshold_study(two_classes, n_thresholds=4, **CV, seed=2)
        assert [row.threshold for row in rows] == [0.25, 0.5, 0.75, 1.0, None]
        assert rows[-1].name.endswith("full")

    def test_threshold_block_equals_single_extraction(self, two_classes):
        rows = single_threshold_study(two_classes, n_thresholds=4, **CV, seed=2)
        data = LabeledDataset.from_vectors([extract_single(c, 0.5) for c in two_classes])
        report = cross_validate(data, "knn:1", seed=2, **{"n_folds": 5, "n_repeats": 5})
        assert rows[1].report.repeat_accuracies == report.repeat_accuracies

    def test_write_study(self, tmp_path, two_classes):
        rows = single_threshold_study(two_classes, n_thresholds=2, **CV)
        csv_path, txt_path = write_study(tmp_path, "single", rows, Provenance("00ff", 0))
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        assert lines[1] == ",".join(STUDY_COLUMNS)
        assert len(lines) == 2 + 3
        assert lines[-1].split(",")[3] == ""
        assert "phi lt n_T=2 T=0.500" in txt_path.read_text(encoding="utf-8")

    def test_requires_labels(self):
        with pytest.raises(ExperimentError):
            sweep_study([Contour(reference_shape("square", 40).points)], (4,))


class TestFigureData:
    """Tests for the interpolation and measurement curves."""

    def test_interpolation_series(self, circle, square):
        series = interpolation_series(circle, square, 4)
        assert [alpha for alpha, _ in series] == [0.0, 0.25, 0.5, 0.75, 1.0]
        with pytest.raises(ExperimentError):
            interpolation_series(circle, square, 0)

    def test_interpolation_curves(self):
        a, b = reference_shape("circle", 40), reference_shape("square", 40)
        rows = interpolation_curves(a, b, 2, SweepPlan.equally_spaced(5))
        assert len(rows) == 3 * 5
        assert rows[0][:2] == (0.0, 0.2)

    def test_measurement_curves(self):
        shapes = [reference_shape("triangle", 30), reference_shape("hexagon", 30)]
        rows = measurement_curves(shapes, SweepPlan.equally_spaced(3))
        assert [name for name, _ in rows] == ["triangle"] * 3 + ["hexagon"] * 3
        assert rows[2][1].avg_path_length > 0

    def test_write_profiles(self, tmp_path):
        paths = write_profiles([reference_shape("square", 40)], 0.4, "lt", tmp_path)
        assert [p.name for p in paths] == ["square.csv"]
        assert len(paths[0].read_text(encoding="utf-8").splitlines()) == 41
