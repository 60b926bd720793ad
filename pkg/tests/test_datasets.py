"""
Tests for contour files, silhouettes, dataset directories, feature files and
the generated geometric dataset.
"""

import numpy as np
import pytest

from contourgraph.datasets import (
    GEOMETRIC_CLASSES,
    load_dataset,
    read_contour_csv,
    read_features,
    read_image,
    save_dataset,
    synthetic_dataset,
    write_contour_csv,
    write_image,
)
from contourgraph.descriptor import extract_varphi
from contourgraph.errors import DatasetError
from contourgraph.exports import Provenance, write_features
from contourgraph.network import SweepPlan
from contourgraph.shapes import Contour, reference_shape

PBM_SQUARE = """P1
# 3x3 block of ink
5 5
0 0 0 0 0
0 1 1 1 0
0 1 1 1 0
0 1 1 1 0
0 0 0 0 0
"""


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def block_mask(shape, rows, cols):
    mask = np.zeros(shape, dtype=bool)
    mask[rows, cols] = True
    return mask


class TestContourFiles:
    """Tests for the x,y contour format."""

    def test_round_trip_is_exact(self, tmp_path, hexagon_contour):
        contour = Contour(hexagon_contour.points, label="hexagon")
        path = write_contour_csv(tmp_path / "hex.csv", contour, Provenance("abc", 3))
        again = read_contour_csv(path)
        assert np.array_equal(again.points, contour.points)
        assert again.label == "hexagon"
        assert again.id == "hex"

    def test_unlabeled_file(self, tmp_path):
        path = write(tmp_path / "t.csv", "0,0\n1,0\n0,1\n")
        contour = read_contour_csv(path)
        assert contour.label is None
        assert len(contour) == 3

    def test_bad_line_reports_position(self, tmp_path):
        path = write(tmp_path / "bad.csv", "# label=x\n0,0\n1;0\n0,1\n")
        with pytest.raises(DatasetError, match=r"bad.csv:3"):
            read_contour_csv(path)

    def test_non_numeric_value(self, tmp_path):
        path = write(tmp_path / "bad.csv", "0,0\n1,zero\n0,1\n")
        with pytest.raises(DatasetError, match="non-numeric"):
            read_contour_csv(path)

    def test_invalid_contour(self, tmp_path):
        path = write(tmp_path / "short.csv", "0,0\n1,1\n")
        with pytest.raises(DatasetError, match="at least 3"):
            read_contour_csv(path)

    def test_undecodable_file(self, tmp_path):
        path = tmp_path / "latin.csv"
        path.write_bytes(b"# label=caf\xe9\n0,0\n1,0\n0,1\n")
        with pytest.raises(DatasetError, match="latin.csv: cannot read"):
            read_contour_csv(path)


class TestSilhouettes:
    """Tests for PBM / PGM tracing."""

    def test_ascii_pbm(self, tmp_path):
        contour = read_image(write(tmp_path / "block.pbm", PBM_SQUARE))
        assert len(contour) == 8
        assert contour.points[0].tolist() == [1.0, 1.0]
        assert contour.id == "block"

    def test_pgm_round_trip(self, tmp_path):
        mask = block_mask((12, 12), slice(2, 9), slice(3, 8))
        contour = read_image(write_image(tmp_path / "rect.pgm", mask))
        assert len(contour) == 2 * (7 + 5) - 4
        assert contour.points[0].tolist() == [3.0, 2.0]

    def test_two_blobs_rejected(self, tmp_path):
        mask = block_mask((10, 10), slice(0, 3), slice(0, 3)) | block_mask((10, 10), slice(6, 9), slice(6, 9))
        with pytest.raises(DatasetError, match="exactly one"):
            read_image(write_image(tmp_path / "two.pgm", mask))

    def test_only_pgm_is_written(self, tmp_path):
        with pytest.raises(DatasetError):
            write_image(tmp_path / "x.png", np.ones((3, 3)))

    def test_undecodable_file(self, tmp_path):
        with pytest.raises(DatasetError, match="cannot decode"):
            read_image(write(tmp_path / "junk.pgm", "not an image"))


class TestLoadDataset:
    """Tests for dataset directories."""

    def test_lexicographic_order_and_ids(self, tmp_path):
        for name in ("b/2.csv", "a/9.csv", "a/10.csv"):
            write(tmp_path / name, "0,0\n1,0\n0,1\n")
        contours = load_dataset(tmp_path)
        assert [c.id for c in contours] == ["a/10", "a/9", "b/2"]
        assert [c.label for c in contours] == ["a", "a", "b"]

    def test_header_label_wins(self, tmp_path):
        write(tmp_path / "a" / "x.csv", "# label=b\n0,0\n1,0\n0,1\n")
        assert load_dataset(tmp_path)[0].label == "b"

    def test_top_level_file_has_no_label(self, tmp_path):
        write(tmp_path / "x.csv", "0,0\n1,0\n0,1\n")
        assert load_dataset(tmp_path)[0].label is None

    def test_mixed_formats(self, tmp_path):
        write(tmp_path / "blocks" / "a.pbm", PBM_SQUARE)
        write_image(tmp_path / "blocks" / "b.pgm", block_mask((8, 8), slice(1, 6), slice(1, 6)))
        write_contour_csv(tmp_path / "blocks" / "c.csv", Contour(reference_shape("square", 40).points))
        write(tmp_path / "blocks" / "notes.txt", "ignored")
        contours = load_dataset(tmp_path)
        assert [c.id for c in contours] == ["blocks/a", "blocks/b", "blocks/c"]
        assert [len(c) for c in contours] == [8, 16, 40]
        assert {c.label for c in contours} == {"blocks"}

    def test_same_shape_in_both_formats(self, tmp_path):
        mask = block_mask((16, 16), slice(3, 12), slice(2, 10))
        mask[3:6, 2:5] = False
        traced = read_image(write_image(tmp_path / "notch" / "image.pgm", mask))
        write_contour_csv(tmp_path / "notch" / "points.csv", traced)
        image, points = load_dataset(tmp_path)
        assert image.label == points.label == "notch"
        plan = SweepPlan.equally_spaced(5)
        assert np.array_equal(extract_varphi(image, plan).values, extract_varphi(points, plan).values)

    def test_empty_directory(self, tmp_path):
        with pytest.raises(DatasetError, match="no .csv"):
            load_dataset(tmp_path)

    def test_not_a_directory(self, tmp_path):
        with pytest.raises(DatasetError, match="not a directory"):
            load_dataset(tmp_path / "missing")

    def test_bad_file_aborts_or_is_skipped(self, tmp_path):
        write(tmp_path / "a" / "good.csv", "0,0\n1,0\n0,1\n")
        write(tmp_path / "a" / "bad.csv", "0,0\n")
        with pytest.raises(DatasetError, match="bad.csv"):
            load_dataset(tmp_path)
        contours = load_dataset(tmp_path, skip_bad=True)
        assert [c.id for c in contours] == ["a/good"]

    def test_undecodable_file_is_skipped(self, tmp_path):
        write(tmp_path / "circle" / "good.csv", "0,0\n1,0\n0,1\n")
        (tmp_path / "circle" / "bad.csv").write_bytes(b"0,0\n1,0\n0,1\xe9\n")
        with pytest.raises(DatasetError, match="bad.csv"):
            load_dataset(tmp_path)
        assert [c.id for c in load_dataset(tmp_path, skip_bad=True)] == ["circle/good"]

    def test_everything_skipped(self, tmp_path):
        write(tmp_path / "bad.csv", "0,0\n")
        with pytest.raises(DatasetError, match="skipped"):
            load_dataset(tmp_path, skip_bad=True)


class TestFeatureFiles:
    """Tests for feature CSV + sidecar read back."""

    def write_vectors(self, tmp_path):
        plan = SweepPlan.equally_spaced(4)
        vectors = [extract_varphi(reference_shape(name, 40), plan) for name in ("square", "triangle", "circle")]
        return write_features(tmp_path / "features.csv", vectors, Provenance("feedbeef", 1)), vectors

    def test_round_trip(self, tmp_path):
        path, vectors = self.write_vectors(tmp_path)
        data = read_features(path)
        assert np.array_equal(data.features, np.vstack([v.values for v in vectors]))
        assert data.labels.tolist() == ["square", "triangle", "circle"]
        assert data.ids == ("square", "triangle", "circle")
        assert data.layout == vectors[0].layout

    def test_provenance_header(self, tmp_path):
        path, _ = self.write_vectors(tmp_path)
        first = path.read_text().splitlines()[0]
        assert first.startswith("# contourgraph version=")
        assert "config_hash=feedbeef seed=1" in first

    def test_missing_sidecar(self, tmp_path):
        path, _ = self.write_vectors(tmp_path)
        path.with_suffix(".json").unlink()
        with pytest.raises(DatasetError, match="cannot read features"):
            read_features(path)

    def test_header_mismatch(self, tmp_path):
        path, _ = self.write_vectors(tmp_path)
        path.write_text(path.read_text().replace("kmu_T0.250", "kmu_T0.300"))
        with pytest.raises(DatasetError, match="header"):
            read_features(path)

    def test_rows_missing_a_column(self, tmp_path):
        path, _ = self.write_vectors(tmp_path)
        lines = path.read_text().splitlines()
        short = [",".join(line.split(",")[:2] + line.split(",")[3:]) for line in lines[2:]]
        path.write_text("\n".join(lines[:2] + short) + "\n")
        with pytest.raises(DatasetError, match="missing values|non-numeric"):
            read_features(path)

    def test_non_numeric_feature(self, tmp_path):
        path, _ = self.write_vectors(tmp_path)
        lines = path.read_text().splitlines()
        cells = lines[2].split(",")
        cells[1] = "high"
        path.write_text("\n".join(lines[:2] + [",".join(cells)] + lines[3:]) + "\n")
        with pytest.raises(DatasetError, match="non-numeric"):
            read_features(path)

    def test_undecodable_table(self, tmp_path):
        path, _ = self.write_vectors(tmp_path)
        path.write_bytes(path.read_bytes() + b"caf\xe9\n")
        with pytest.raises(DatasetError, match="cannot read features"):
            read_features(path)


class TestSyntheticDataset:
    """Tests for the generated geometric dataset."""

    def test_size_and_order(self):
        contours = synthetic_dataset(n_per_class=3, n_samples=60, seed=2)
        assert len(contours) == 3 * len(GEOMETRIC_CLASSES)
        labels = [c.label for c in contours]
        assert labels == sorted(labels)
        assert contours[0].id == "circle/circle_000"
        assert all(len(c) == 60 for c in contours)

    def test_deterministic(self):
        a = synthetic_dataset(n_per_class=2, n_samples=60, seed=7)
        b = synthetic_dataset(n_per_class=2, n_samples=60, seed=7)
        c = synthetic_dataset(n_per_class=2, n_samples=60, seed=8)
        assert all(np.array_equal(x.points, y.points) for x, y in zip(a, b))
        assert not all(np.array_equal(x.points, y.points) for x, y in zip(a, c))

    def test_samples_of_a_class_differ_in_shape(self):
        a, b = synthetic_dataset(n_per_class=2, noise_level=0, n_samples=60, seed=3, classes=["square"])
        plan = SweepPlan.equally_spaced(13)
        assert not np.allclose(extract_varphi(a, plan).values, extract_varphi(b, plan).values)

    def test_class_subset(self):
        contours = synthetic_dataset(n_per_class=2, n_samples=60, classes=["star5", "circle"])
        assert [c.label for c in contours] == ["circle", "circle", "star5", "star5"]

    def test_unknown_class(self):
        with pytest.raises(DatasetError, match="Unknown geometric classes"):
            synthetic_dataset(classes=["blob"])

    def test_saved_dataset_reloads_in_order(self, tmp_path):
        contours = synthetic_dataset(n_per_class=2, n_samples=60, seed=4, classes=["square", "hexagon"])
        save_dataset(tmp_path, contours)
        loaded = load_dataset(tmp_path)
        assert [c.id for c in loaded] == [c.id for c in contours]
        assert [c.label for c in loaded] == [c.label for c in contours]
        assert all(np.array_equal(x.points, y.points) for x, y in zip(loaded, contours))
