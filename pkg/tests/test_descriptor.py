"""
Unit tests for the phi / varphi / single-threshold descriptors.
"""

import numpy as np
import pytest

from contourgraph.descriptor import (
    DescriptorLayout,
    FeatureVector,
    extract,
    extract_phi,
    extract_single,
    extract_varphi,
)
from contourgraph.errors import DescriptorError
from contourgraph.metrics import MEASUREMENT_NAMES
from contourgraph.network import Mode, SweepPlan
from contourgraph.shapes import PerturbSpec, perturb, reference_shape

from tests.conftest import random_contour

PLAN = SweepPlan.equally_spaced(13)


@pytest.fixture
def star():
    return reference_shape("star5", n_samples=60)


class TestLengths:
    """Descriptor dimensions."""

    def test_phi_has_91_values(self, star):
        vector = extract_phi(star, PLAN)
        assert len(vector) == 91
        assert vector.layout.kind == "phi"
        assert vector.label == "star5"

    def test_varphi_has_26_values(self, star):
        vector = extract_varphi(star, PLAN)
        assert len(vector) == 26
        assert vector.layout.measurements == ("kmu", "kmax")

    def test_subset_keeps_canonical_order(self, star):
        vector = extract_phi(star, SweepPlan((0.3, 0.6)), measurements=["cc", "k"])
        assert vector.layout.measurements == ("k", "cc")
        assert len(vector) == 4

    def test_unknown_measurement(self, star):
        with pytest.raises(DescriptorError, match="Unknown measurements"):
            extract_phi(star, PLAN, measurements=["k", "diameter"])

    def test_dispatch(self, star):
        assert np.array_equal(extract(star, "varphi", PLAN).values, extract_varphi(star, PLAN).values)
        with pytest.raises(DescriptorError):
            extract(star, "psi", PLAN)


class TestInvariance:
    """Descriptors ignore rotation, scale and the starting point."""

    @pytest.mark.parametrize("angle", [35, 132, 298])
    def test_rotation(self, rng, angle):
        contour = random_contour(rng, 60)
        turned = perturb(contour, PerturbSpec("rotate", angle_deg=angle))
        assert np.allclose(extract_phi(turned, PLAN).values, extract_phi(contour, PLAN).values, atol=1e-9)

    def test_scale(self, rng):
        contour = random_contour(rng, 60)
        scaled = perturb(contour, PerturbSpec("scale", factor=0.4))
        assert np.allclose(extract_phi(scaled, PLAN).values, extract_phi(contour, PLAN).values, atol=1e-9)

    def test_starting_point(self, star):
        assert np.array_equal(extract_phi(star.shifted(17), PLAN).values, extract_phi(star, PLAN).values)


class TestSingleThreshold:
    """Tests for extract_single."""

    def test_complete_graph_values(self, star):
        n = len(star)
        vector = extract_single(star, 1.5)
        assert vector.values.tolist() == [n - 1, (n - 1) ** 2, 0, 1, 1, 0, 0]

    def test_empty_graph_values(self, star):
        vector = extract_single(star, 0.0)
        assert vector.values.tolist() == [0, 0, 0, 0, len(star), 0, 0]

    @pytest.mark.parametrize("mode", [Mode.SMALLER_THAN, Mode.GREATER_THAN])
    def test_matches_phi_slice(self, star, mode):
        plan = SweepPlan.equally_spaced(13, mode)
        phi = extract_phi(star, plan)
        t = plan.thresholds[4]
        assert np.array_equal(extract_single(star, t, mode).values, phi.slice_at(t))

    def test_varphi_degree_matches_phi(self, star):
        phi = extract_phi(star, PLAN, measurements=["k"])
        varphi = extract_varphi(star, PLAN)
        assert np.array_equal(varphi.values[0::2], phi.values)


class TestLayout:
    """Tests for DescriptorLayout and FeatureVector."""

    def test_column_names(self):
        layout = DescriptorLayout("phi", (0.5, 1.0), "lt", ("k", "cc"))
        assert layout.column_names() == ["k_T0.500", "cc_T0.500", "k_T1.000", "cc_T1.000"]

    def test_close_thresholds_stay_distinct(self):
        layout = DescriptorLayout("varphi", (0.1231, 0.1234), "gt", ("kmu", "kmax"))
        names = layout.column_names()
        assert len(set(names)) == 4

    def test_dict_form(self):
        layout = DescriptorLayout("single_t", (0.25,), Mode.GREATER_THAN, MEASUREMENT_NAMES)
        assert DescriptorLayout.from_dict(layout.to_dict()) == layout
        assert layout.to_dict()["mode"] == "greater_than"

    def test_single_layout_needs_one_threshold(self):
        with pytest.raises(DescriptorError):
            DescriptorLayout("single_t", (0.2, 0.4), "lt", MEASUREMENT_NAMES)

    def test_length_mismatch(self):
        layout = DescriptorLayout("phi", (0.5,), "lt", ("k",))
        with pytest.raises(DescriptorError):
            FeatureVector([1.0, 2.0], layout)

    def test_slice_at_unknown_threshold(self, star):
        with pytest.raises(DescriptorError):
            extract_phi(star, PLAN).slice_at(0.42)
