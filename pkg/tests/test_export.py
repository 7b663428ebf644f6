"""Heisenberg chart, PPM rasters and cloud files."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crlimset.errors import PoleSingularity
from crlimset.export import (
    CSV_HEADER,
    RasterSpec,
    auto_window,
    heisenberg,
    heisenberg_array,
    project,
    read_cloud_csv,
    read_ppm,
    render_ppm,
    write_cloud,
)
from crlimset.hermitian import BoundaryPoint
from crlimset.limitset import OrbitConfig, cyclic_demo, run


def random_s3(n, seed=0):
    x = np.random.default_rng(seed).standard_normal((n, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x[:, 0:4:2] + 1j * x[:, 1:4:2]


def test_heisenberg_examples():
    assert heisenberg((1, 0)) == pytest.approx((0, 0, 0))
    # hx + i hy = z2 / (1 + z1) = 1 and (1 - z1)/(1 + z1) = 1 is real
    assert heisenberg((0, 1)) == pytest.approx((1, 0, 0))
    assert heisenberg((0, 1j)) == pytest.approx((0, 1, 0))
    assert heisenberg((1j, 0)) == pytest.approx((0, 0, -1))
    with pytest.raises(PoleSingularity):
        heisenberg((-1, 0))
    p = BoundaryPoint.from_lift(np.array([0, 1, 1]))
    assert heisenberg(p) == pytest.approx((1, 0, 0))


def test_heisenberg_array_drops_pole():
    z = np.array([[1, 0], [-1, 0], [0, 1]], dtype=complex)
    h, ok = heisenberg_array(z)
    assert ok.tolist() == [True, False, True]
    assert h.shape == (2, 3)
    assert h[1] == pytest.approx(heisenberg((0, 1)))


def test_heisenberg_injective_on_samples():
    z = random_s3(10_000, seed=5)
    z = z[np.abs(1 + z[:, 0]) > 1e-3]
    h, ok = heisenberg_array(z)
    assert ok.all()
    assert len(np.unique(np.round(h, 9), axis=0)) == len(z)


@given(st.integers(0, 10_000))
def test_heisenberg_cone_identity(seed):
    z = random_s3(50, seed)
    h, _ = heisenberg_array(z)
    re = ((1 - z[:, 0]) / (1 + z[:, 0])).real
    assert np.allclose(re, h[:, 0] ** 2 + h[:, 1] ** 2, rtol=1e-9, atol=1e-12)


def test_project_planes():
    h = np.arange(6.0).reshape(2, 3)
    assert project(h, "hx-ht").tolist() == [[0, 2], [3, 5]]
    with pytest.raises(ValueError):
        project(h, "hz-hx")


@pytest.mark.parametrize("r", [0, 1, 2, 3])
def test_single_point_disc(r):
    spec = RasterSpec(16, 16, window=(-1, 1, -1, 1), point_radius=r)
    img = read_ppm(render_ppm(np.array([[0.0, 0.0]]), spec))[:, :, 0]
    cx, cy = 8, 8  # floor((0 + 1) / 2 * 16)
    yy, xx = np.mgrid[0:16, 0:16]
    want = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
    assert np.array_equal(img == 0, want)


def test_raster_orientation():
    spec = RasterSpec(16, 16, window=(0, 1, 0, 1))
    img = read_ppm(render_ppm(np.array([[0.05, 0.95]]), spec))[:, :, 0]
    assert img[0, 0] == 0  # top-left is (xmin, ymax)


def test_render_deterministic_and_header():
    pts = np.random.default_rng(1).standard_normal((500, 2))
    a = render_ppm(pts, RasterSpec(64, 48))
    assert a == render_ppm(pts.copy(), RasterSpec(64, 48))
    assert a.startswith(b"P6\n64 48\n255\n")
    assert len(a) == len(b"P6\n64 48\n255\n") + 64 * 48 * 3


def test_render_empty_warns():
    with pytest.warns(UserWarning):
        data = render_ppm(np.empty((0, 2)), RasterSpec(16, 16))
    assert (read_ppm(data) == 255).all()


def test_raster_spec_validation():
    with pytest.raises(ValueError):
        RasterSpec(8, 16)
    with pytest.raises(ValueError):
        RasterSpec(plane="x-y")
    with pytest.raises(ValueError):
        RasterSpec(point_radius=-1)


def test_auto_window_margin():
    pts = np.array([[0.0, 0.0], [1.0, 2.0]])
    assert auto_window(pts) == pytest.approx((-0.05, 1.05, -0.1, 2.1))
    assert auto_window(np.array([[1.0, 1.0]])) == pytest.approx((0.5, 1.5, 0.5, 1.5))


def test_write_empty_and_cyclic(tmp_path):
    empty = tmp_path / "e.csv"
    res = write_cloud(np.empty((0, 2)), empty)
    assert res.rows == 0 and empty.read_text() == CSV_HEADER + "\n"
    assert read_cloud_csv(empty).shape == (0, 2)
    c = run(cyclic_demo(), OrbitConfig(max_points=100))
    res = write_cloud(c, tmp_path / "c.csv")
    assert res.rows == 2 and res.dropped == 0


def test_csv_round_trip(tmp_path):
    z = random_s3(2000, seed=2)
    write_cloud(z, tmp_path / "r.csv")
    back = read_cloud_csv(tmp_path / "r.csv")
    assert np.abs(back - z).max() <= 1e-15


def test_pole_points_counted(tmp_path):
    z = np.array([[-1, 0], [0, 1]], dtype=complex)
    res = write_cloud(z, tmp_path / "p.csv")
    assert (res.rows, res.dropped) == (1, 1)


def test_ply(tmp_path):
    z = random_s3(10)
    res = write_cloud(z, tmp_path / "c.ply")
    lines = (tmp_path / "c.ply").read_text().splitlines()
    assert lines[0] == "ply" and "element vertex 10" in lines
    body = lines[lines.index("end_header") + 1 :]
    assert len(body) == res.rows == 10
    h, _ = heisenberg_array(z)
    assert np.allclose(np.array([list(map(float, b.split())) for b in body]), h, rtol=1e-8)
    with pytest.raises(ValueError):
        write_cloud(z, tmp_path / "c.xyz", fmt="xyz")
