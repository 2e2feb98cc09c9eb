import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ma_lab.array import (Geometry1D, Geometry2D, Region, SensingScene, SpatialAngles, channel,
                          centering_matrix, geometry_from_json, geometry_to_json, position_stats,
                          steering_vector_1d, steering_vector_2d)
from ma_lab.errors import GeometryError, InfeasibleError


def test_geometry1d_sorted_and_readonly():
    g = Geometry1D([3.0, 0.0, 1.5])
    np.testing.assert_array_equal(g.positions, [0.0, 1.5, 3.0])
    with pytest.raises(ValueError):
        g.positions[0] = 1.0
    assert g.n == 3 and g.min_gap() == 1.5


def test_geometry1d_rejects_bad_input():
    with pytest.raises(GeometryError):
        Geometry1D([1.0])
    with pytest.raises(GeometryError):
        Geometry1D([0.0, np.nan])


def test_geometry1d_feasibility_messages():
    g = Geometry1D([0.0, 0.4, 2.0])
    with pytest.raises(InfeasibleError, match="x_2 - x_1"):
        g.check(length=2.0, spacing=0.5)
    with pytest.raises(InfeasibleError, match="> A"):
        g.check(length=1.0)
    assert g.is_feasible(length=2.0, spacing=0.4)


def test_geometry2d_distances_and_transforms():
    g = Geometry2D([0, 3, 0], [0, 0, 4])
    assert g.min_distance() == pytest.approx(3.0)
    assert g.pairwise_distances()[1, 2] == pytest.approx(5.0)
    sw = g.swapped()
    np.testing.assert_array_equal(sw.xs, g.ys)
    r = g.rotated(math.pi / 2)
    np.testing.assert_allclose(r.points[1], [0, 3], atol=1e-12)
    assert Geometry2D.from_points(g.points) == g


def test_geometry2d_mismatched_lengths():
    with pytest.raises(GeometryError):
        Geometry2D([0, 1], [0])


def test_region_square_origin_and_centered():
    a = Region.square(2.0)
    b = Region.square(2.0, centered=True)
    assert a.origin == (0.0, 0.0) and b.origin == (-1.0, -1.0)
    assert a.contains([[0, 0], [2, 2]]) and not b.contains([[2, 2]])
    assert a.violation([[3.0, 1.0]]) == pytest.approx(1.0)


def test_region_polygon_validation():
    tri = Region.polygon([[0, 0], [1, 0], [0, 1]])
    assert tri.contains([[0.2, 0.2]])
    with pytest.raises(GeometryError, match="counterclockwise"):
        Region.polygon([[0, 0], [0, 1], [1, 0]])
    with pytest.raises(GeometryError, match="convex"):
        Region.polygon([[0, 0], [2, 0], [1, 0.2], [2, 2], [0, 2]])
    with pytest.raises(GeometryError):
        Region.circle(0.0)


def test_region_transposed_and_roundtrip():
    poly = Region.polygon([[0, 0], [3, 0], [3, 1], [0, 1]])
    t = poly.transposed()
    assert t.contains([[0.5, 2.5]]) and not t.contains([[2.5, 0.5]])
    for r in (poly, Region.circle(2.0, (1, 1)), Region.square(5.0, (1, 2))):
        assert Region.from_dict(r.to_dict()).to_dict() == r.to_dict()


def test_steering_vector_examples():
    a = steering_vector_1d(Geometry1D([0.0, 0.5]), 1.0)
    np.testing.assert_allclose(a, [1, -1], atol=1e-12)
    assert steering_vector_1d([0.0, 2.0, 3.0], 0.3)[0] == 1 + 0j
    b = steering_vector_2d(Geometry2D([0.5, 0.0], [0.5, 0.0]), (1.0, 0.0))
    np.testing.assert_allclose(b[0], -1, atol=1e-12)
    with pytest.raises(GeometryError):
        steering_vector_1d([0.0, 1.0], 1.5)
    with pytest.raises(GeometryError):
        steering_vector_2d(Geometry2D([0, 1], [0, 1]), (0.8, 0.8))


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=20, unique=True),
       st.floats(-1, 1))
def test_steering_unit_modulus(xs, u):
    a = steering_vector_1d(Geometry1D(xs), u)
    np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-12)


def test_channel_scaling():
    a = steering_vector_1d([0.0, 1.0], 0.2)
    np.testing.assert_allclose(channel(1.0, a), a)
    assert abs(channel(2.0, a)[0]) == pytest.approx(2.0)


def test_spatial_angles():
    ang = SpatialAngles.from_elevation_azimuth(math.pi / 4, math.pi / 3)
    assert ang.u == pytest.approx(0.3536, abs=1e-4) and ang.v == pytest.approx(0.7071, abs=1e-4)
    assert SpatialAngles.from_steering_angle(0.0).u == pytest.approx(1.0)
    with pytest.raises(GeometryError):
        SpatialAngles(1.2)


def test_scene_snr_and_prefactor():
    sc = SensingScene.from_snr_db(16, SpatialAngles(0.5), 20.0)
    assert sc.snr_db == pytest.approx(20.0)
    assert sc.prefactor == pytest.approx(0.01 / (8 * math.pi**2 * 16))
    assert SensingScene(4, SpatialAngles(0.0), noise_power=0.0).prefactor == 0.0
    assert math.isinf(SensingScene(4, SpatialAngles(0.0), power=0.0).prefactor)
    with pytest.raises(GeometryError):
        SensingScene(1, SpatialAngles(0.0))


def test_scene_beta_phase_seeded():
    sc = SensingScene(4, SpatialAngles(0.0), beta_abs=2.0)
    b1 = sc.beta(np.random.default_rng(3))
    b2 = sc.beta(np.random.default_rng(3))
    assert b1 == b2 and abs(b1) == pytest.approx(2.0)
    fixed = SensingScene(4, SpatialAngles(0.0), beta_phase=0.0).beta()
    assert fixed == 1 + 0j


def test_position_stats_offset_invariant():
    g = Geometry2D([0, 1, 2, 5], [1, 0, 3, 2])
    far = g.translated(1e8, -1e8)
    a, b = position_stats(g), position_stats(far)
    assert a.var_x == pytest.approx(b.var_x, rel=1e-9)
    assert a.cov_xy == pytest.approx(b.cov_xy, rel=1e-8)


def test_centering_matrix_gives_variance(rng):
    x = rng.normal(size=9)
    assert x @ centering_matrix(9) @ x == pytest.approx(np.var(x))


def test_geometry_json_roundtrip():
    g1 = Geometry1D([0, 1, 3])
    g2 = Geometry2D([0, 1], [2, 3])
    assert geometry_from_json(geometry_to_json(g1)) == g1
    assert geometry_from_json(geometry_to_json(g2)) == g2
    assert json.loads(geometry_to_json(g2)) == {"xs": [0.0, 1.0], "ys": [2.0, 3.0]}
