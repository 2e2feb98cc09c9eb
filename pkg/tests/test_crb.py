import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ma_lab.array import Geometry1D, Geometry2D, Region, SensingScene, SpatialAngles
from ma_lab.crb import (crb_1d, crb_2d, enclosing_circles, max_inscribed_circle,
                        min_enclosing_circle, minmax_crb, minmax_delta, region_bounds)
from ma_lab.errors import GeometryError


@pytest.fixture
def scene():
    return SensingScene.from_snr_db(4, SpatialAngles(0.3, 0.2), 10.0)


def test_crb_1d_formula(scene):
    g = Geometry1D([0, 1, 2, 3])
    rep = crb_1d(scene, g)
    assert rep.crb_u == pytest.approx(scene.prefactor / 1.25)
    assert not rep.degenerate and rep.crb_v is None


def test_crb_1d_degenerate(scene):
    rep = crb_1d(scene, Geometry1D([2.0, 2.0, 2.0, 2.0]))
    assert math.isinf(rep.crb_u) and rep.degenerate


def test_crb_2d_formula(scene):
    g = Geometry2D([0, 2, 0, 2], [0, 0, 1, 1])
    rep = crb_2d(scene, g)
    assert rep.crb_u == pytest.approx(scene.prefactor / 1.0)
    assert rep.crb_v == pytest.approx(scene.prefactor / 0.25)
    assert minmax_crb(rep) == rep.crb_v
    assert minmax_delta(g) == pytest.approx(0.25)


def test_crb_2d_collinear(scene):
    rep = crb_2d(scene, Geometry2D([0, 1, 2, 3], [0, 1, 2, 3]))
    assert rep.collinear and math.isinf(rep.crb_u) and math.isinf(rep.crb_v)
    assert minmax_delta(Geometry2D([0, 1, 2, 3], [0, 1, 2, 3])) == pytest.approx(0.0, abs=1e-12)


def test_minmax_crb_rejects_1d(scene):
    with pytest.raises(GeometryError):
        minmax_crb(crb_1d(scene, Geometry1D([0, 1, 2, 3])))


def test_report_json(scene):
    d = crb_2d(scene, Geometry2D([0, 2, 0, 2], [0, 0, 1, 1])).to_dict()
    assert set(d) == {"prefactor", "crb_u", "crb_v", "var_x", "var_y", "cov_xy"}


@given(st.floats(0, 2 * math.pi))
def test_crb_2d_rotation_keeps_trace(angle):
    # trace of the inverse Fisher matrix is rotation invariant
    sc = SensingScene(5, SpatialAngles(0.0))
    g = Geometry2D([0, 1, 3, 0.5, 2], [0, 2, 1, 3, 0.2])
    a = crb_2d(sc, g)
    b = crb_2d(sc, g.rotated(angle))
    assert a.crb_u + a.crb_v == pytest.approx(b.crb_u + b.crb_v, rel=1e-9)


def test_min_enclosing_circle_brute_force(rng):
    for _ in range(20):
        pts = rng.normal(size=(12, 2))
        c, r = min_enclosing_circle(pts)
        assert np.all(np.linalg.norm(pts - c, axis=1) <= r + 1e-9)
        # no circle through 2 or 3 of the points that encloses all is smaller
        best = math.inf
        for i in range(12):
            for j in range(i + 1, 12):
                cc = (pts[i] + pts[j]) / 2
                rr = np.linalg.norm(pts[i] - cc)
                if np.all(np.linalg.norm(pts - cc, axis=1) <= rr + 1e-9):
                    best = min(best, rr)
        assert r <= best + 1e-9


def test_inscribed_circle_square_and_triangle():
    c, r = max_inscribed_circle(Region.square(4.0, (1, 1)))
    assert r == pytest.approx(2.0) and np.allclose(c, [3, 3])
    _, r = max_inscribed_circle(Region.polygon([[0, 0], [3, 0], [0, 4]]))
    assert r == pytest.approx(1.0)  # (a + b - c) / 2 for a right triangle


def test_enclosing_circles_square():
    a_ins, a_cir = enclosing_circles(Region.square(5.0))
    assert a_ins == 2.5 and a_cir == pytest.approx(5 / math.sqrt(2))


def test_region_bounds_square():
    sc = SensingScene.from_snr_db(36, SpatialAngles(0.35, 0.71), 15.0)
    b = region_bounds(sc, Region.square(5.0))
    assert b.delta_upper == pytest.approx(6.25)
    assert b.delta_lower == pytest.approx(3.125)
    assert b.crb_lower == pytest.approx(4 * sc.prefactor / 25)
    assert b.crb_lower < b.crb_upper
    # 2 a_ins sin(pi/36) = 0.436 < D: the circle construction does not fit
    assert not b.lower_attained
    assert region_bounds(sc.with_n(16), Region.square(5.0)).lower_attained
    assert not region_bounds(sc.with_n(6), Region.square(5.0)).lower_attained
