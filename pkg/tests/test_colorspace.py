import numpy as np
import pytest
from pydantic import ValidationError

from app.schemas.colorspace import ChromaticityMode, ChromaticityPoint, RgbIntensity
from app.services.colorspace import (
    PRIMARY_POINTS, RGB_TO_XY, DegenerateChromaticityError, barycentric, project, rgb_to_xy, rgb_to_xy_array,
    rgb_to_xy_chromaticity,
)


class TestTristimulusProjection:

    def test_primaries_map_to_matrix_columns_exactly(self):
        out = rgb_to_xy_array(np.eye(3))
        assert np.array_equal(out, RGB_TO_XY.T)

    def test_blue_vertex(self):
        p = rgb_to_xy(RgbIntensity(r=0.0, g=0.0, b=1.0))
        assert (p.x, p.y) == (0.1805, 0.0722)

    def test_red_and_green(self):
        assert rgb_to_xy(RgbIntensity(r=1.0, g=0.0, b=0.0)).as_array().tolist() == [0.4124, 0.2126]
        assert rgb_to_xy(RgbIntensity(r=0.0, g=1.0, b=0.0)).as_array().tolist() == [0.3576, 0.7152]

    def test_zero_input(self):
        p = rgb_to_xy(RgbIntensity(r=0.0, g=0.0, b=0.0))
        assert (p.x, p.y) == (0.0, 0.0)

    def test_linearity(self, rng):
        a = rng.random((10_000, 3))
        b = rng.random((10_000, 3))
        alpha = rng.random((10_000, 1))
        lhs = rgb_to_xy_array(alpha * a + (1 - alpha) * b)
        rhs = alpha * rgb_to_xy_array(a) + (1 - alpha) * rgb_to_xy_array(b)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_batch_shape(self, rng):
        assert rgb_to_xy_array(rng.random((4, 5, 3))).shape == (4, 5, 2)


class TestNormalizedChromaticity:

    def test_white_point(self):
        p = rgb_to_xy_chromaticity(RgbIntensity(r=1.0, g=1.0, b=1.0))
        assert p.x == pytest.approx(0.3127, abs=1e-3)
        assert p.y == pytest.approx(0.3290, abs=1e-3)

    def test_blue(self):
        p = rgb_to_xy_chromaticity(RgbIntensity(r=0.0, g=0.0, b=1.0))
        assert p.x == pytest.approx(0.1500, abs=1e-3)
        assert p.y == pytest.approx(0.0600, abs=1e-3)

    def test_zero_input_is_degenerate(self):
        with pytest.raises(DegenerateChromaticityError):
            rgb_to_xy_chromaticity(RgbIntensity(r=0.0, g=0.0, b=0.0))

    def test_dark_samples_map_to_given_point(self):
        rgb = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
        points = project(rgb, ChromaticityMode.normalized, dark_point=np.array([0.3, 0.3]))
        assert points[0].tolist() == [0.3, 0.3] == points[2].tolist()
        assert np.allclose(points[1], [0.15, 0.06], atol=1e-3)

    def test_dark_point_ignored_by_tristimulus(self):
        rgb = np.zeros((2, 3))
        assert np.array_equal(project(rgb, "tristimulus", dark_point=np.array([0.3, 0.3])), np.zeros((2, 2)))

    def test_scale_invariant(self, rng):
        rgb = rng.random((100, 3)) + 0.01
        normalized = project(rgb, ChromaticityMode.normalized)
        assert np.allclose(project(0.5 * rgb, ChromaticityMode.normalized), normalized, atol=1e-14)

    def test_project_dispatch(self, rng):
        rgb = rng.random((10, 3))
        assert np.array_equal(project(rgb, "tristimulus"), rgb_to_xy_array(rgb))


class TestTypes:

    def test_rgb_range_enforced(self):
        with pytest.raises(ValidationError):
            RgbIntensity(r=1.2, g=0.0, b=0.0)
        with pytest.raises(ValidationError):
            RgbIntensity(r=0.0, g=-0.1, b=0.0)

    def test_point_must_be_finite(self):
        with pytest.raises(ValidationError):
            ChromaticityPoint(x=float("nan"), y=0.0)

    def test_barycentric_of_primaries(self):
        assert np.allclose(barycentric(PRIMARY_POINTS), np.eye(3), atol=1e-12)
