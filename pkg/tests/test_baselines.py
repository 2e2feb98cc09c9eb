import math

import numpy as np
import pytest

from ma_lab.array import Region
from ma_lab.baselines import fit_into_region, generate_baseline, ula_full, ula_half, upa_full, upa_half
from ma_lab.errors import InfeasibleError


def test_ula_layouts():
    np.testing.assert_allclose(ula_half(2).positions, [0, 0.5])
    g = ula_full(16, 10)
    assert g.positions[0] == 0 and g.positions[-1] == 10
    assert np.allclose(np.diff(g.positions), 2 / 3)
    with pytest.raises(InfeasibleError):
        ula_half(30, 10)


def test_upaf_square_grid():
    g = upa_full(36, Region.square(5))
    assert sorted(set(np.round(g.xs, 12))) == [0, 1, 2, 3, 4, 5]
    assert g.min_distance() == pytest.approx(1.0)


def test_upa_truncation_row_major():
    g = upa_full(8, Region.square(5))
    np.testing.assert_allclose(g.points[:3], [[0, 0], [2.5, 0], [5, 0]])
    np.testing.assert_allclose(g.points[-2:], [[0, 5], [2.5, 5]])
    h = upa_half(8, Region.square(5))
    assert h.min_distance() == pytest.approx(0.5)
    assert Region.square(5).contains(h.points)


def test_upa_in_circle_is_shrunk():
    reg = Region.circle(2.0)
    g = upa_full(9, reg)
    assert reg.contains(g.points, 1e-12)
    assert max(np.hypot(g.xs, g.ys)) == pytest.approx(2.0, rel=1e-9)


def test_fit_into_region_identity_when_inside():
    pts = np.array([[1.0, 1.0], [2.0, 2.0]])
    out = fit_into_region(pts, Region.square(3.0))
    assert np.allclose(out.mean(axis=0), [1.5, 1.5])


def test_generate_baseline_dispatch():
    assert generate_baseline("ULAH", 4).n == 4
    assert generate_baseline("upaf", 9, region=Region.square(2)).n == 9
    with pytest.raises(ValueError):
        generate_baseline("ulaf", 4)
    with pytest.raises(ValueError):
        generate_baseline("spiral", 4)
