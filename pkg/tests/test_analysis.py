import io

import numpy as np
import pytest
from numpy.testing import assert_allclose

from handeyecov.analysis import (
    ellipse_points,
    plot_covariance_comparison,
    plot_ellipse,
    project,
    savetxt,
)


class TestProject:
    def test_axis_pairs(self):
        cov = np.arange(9.0).reshape(3, 3)
        assert_allclose(project(cov, "xy"), [[0.0, 1.0], [3.0, 4.0]])
        assert_allclose(project(cov, "yz"), [[4.0, 5.0], [7.0, 8.0]])
        assert_allclose(project(cov, "xz"), [[0.0, 2.0], [6.0, 8.0]])

    def test_unknown_pair(self):
        with pytest.raises(ValueError):
            project(np.eye(3), "zx")


class TestEllipsePoints:
    def test_unit_circle(self):
        e = ellipse_points(np.eye(2))
        assert len(e.x) == 360
        assert_allclose(np.hypot(e.x, e.y), 1.0)

    def test_semi_axes(self):
        e = ellipse_points(np.diag([1.0, 4.0]))
        assert_allclose(e.semi_axes, [2.0, 1.0])
        assert_allclose(np.abs(e.directions[:, 0]), [0.0, 1.0], atol=1e-15)
        assert np.max(np.abs(e.y)) == pytest.approx(2.0)
        assert np.max(np.abs(e.x)) == pytest.approx(1.0, abs=1e-3)

    def test_rotated_principal_axis(self):
        c, s = np.cos(0.4), np.sin(0.4)
        V = np.array([[c, -s], [s, c]])
        e = ellipse_points(V @ np.diag([9.0, 1.0]) @ V.T)
        assert_allclose(e.semi_axes, [3.0, 1.0])
        assert abs(e.directions[:, 0] @ [c, s]) == pytest.approx(1.0)

    def test_points_on_level_set(self):
        cov = np.array([[2.0, 0.3], [0.3, 0.5]])
        e = ellipse_points(cov, nsigma=2.0)
        m = np.einsum("ni,ij,nj->n", e.points, np.linalg.inv(cov), e.points)
        assert_allclose(m, 4.0)

    def test_center(self):
        e = ellipse_points(np.eye(2), center=(1.0, -2.0), n=8)
        assert_allclose(e.points.mean(axis=0), [1.0, -2.0], atol=1e-15)

    def test_degenerate(self):
        e = ellipse_points(np.diag([1.0, 0.0]))
        assert_allclose(e.semi_axes, [1.0, 0.0])
        assert_allclose(e.y, 0.0, atol=1e-15)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            ellipse_points(np.eye(3))


class TestOutput:
    def test_csv(self):
        buffer = io.StringIO()
        savetxt(buffer, ellipse_points(np.eye(2), n=4))
        lines = buffer.getvalue().splitlines()
        assert lines[0] == "x,y"
        assert len(lines) == 5
        x, y = (float(v) for v in lines[1].split(","))
        assert np.hypot(x, y) == pytest.approx(1.0)

    def test_csv_path(self, tmp_path):
        path = tmp_path / "ellipse.csv"
        savetxt(path, ellipse_points(np.eye(2), n=10))
        assert len(path.read_text().splitlines()) == 11

    def test_plot_ellipse(self, tmp_path):
        path = tmp_path / "ellipse.png"
        plot_ellipse(path, ellipse_points(np.diag([2.0, 1.0])), title="xy")
        assert path.stat().st_size > 0

    def test_comparison_figure(self, tmp_path):
        path = tmp_path / "comparison.png"
        rot = 1e-5 * np.diag([1.0, 2.0, 3.0])
        trans = 1e-4 * np.diag([3.0, 2.0, 1.0])
        plot_covariance_comparison(path, (rot, trans), (1.1 * rot, 0.9 * trans))
        assert path.stat().st_size > 0
