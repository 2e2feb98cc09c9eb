import math

import numpy as np
import pytest

from ma_lab.array import Geometry2D, Region, SensingScene, SpatialAngles, position_stats
from ma_lab.baselines import upa_full
from ma_lab.crb import crb_2d, minmax_crb, minmax_delta, region_bounds
from ma_lab.errors import (DegenerateInputError, InfeasibleError, PerturbationRequired,
                           UnsupportedConfiguration)
from ma_lab.geometry2d import (RotationGroups, ScaConfig, build_subproblem_x, build_subproblem_y,
                               circular_optimal, optimize_2d, rotation_schedule, surrogate_g1)
from ma_lab.socp import solve


def test_circular_optimal_statistics():
    for n, a in [(4, 1.0), (8, 1.0), (16, 2.0), (36, 3.0)]:
        d = 2 * a * math.sin(math.pi / n)
        g = circular_optimal(n, a, d)
        st = position_stats(g)
        assert st.var_x == pytest.approx(a * a / 2, abs=1e-12)
        assert st.var_y == pytest.approx(a * a / 2, abs=1e-12)
        assert abs(st.cov_xy) <= 1e-12
        assert g.min_distance() >= d - 1e-12


def test_circular_custom_rotation_and_center():
    g = circular_optimal(8, 1.0, 2 * math.sin(math.pi / 12), rho=(0.0, math.pi / 4), center=(2, 3))
    assert np.allclose(g.points.mean(axis=0), [2, 3])
    with pytest.raises(InfeasibleError):
        circular_optimal(8, 1.0, 2 * math.sin(math.pi / 12), rho=(0.0, 0.1))


def test_circular_rejects_bad_n_and_spacing():
    with pytest.raises(UnsupportedConfiguration):
        circular_optimal(6, 1.0, 0.1)
    with pytest.raises(InfeasibleError):
        rotation_schedule(2, 1.0, 1.0)
    with pytest.raises(InfeasibleError):
        RotationGroups(2, (0.0, 1.7), 1.0, 0.1)


def test_surrogate_minorant(rng):
    # the tangent plane lies below var(x) and touches it at the reference
    xr = rng.normal(size=7)
    assert surrogate_g1(xr, xr) == pytest.approx(np.var(xr))
    for _ in range(20):
        x = rng.normal(size=7)
        assert surrogate_g1(x, xr) <= np.var(x) + 1e-12


def test_subproblem_is_tight_at_reference():
    reg = Region.square(5.0)
    g = upa_full(36, reg)
    p = build_subproblem_x(g.xs, g.ys, reg, 0.5)
    assert p.n == 37
    z = np.r_[g.xs, minmax_delta(g)]
    assert p.max_violation(z) <= 1e-9
    r = solve(p)
    assert r.status == "optimal" and r.objective >= minmax_delta(g) - 1e-7
    q = build_subproblem_y(g.ys, g.xs, reg, 0.5)
    assert q.var_names[0] == "y0"


def test_subproblem_solution_is_feasible_for_true_problem():
    reg = Region.square(5.0)
    g = upa_full(16, reg)
    r = solve(build_subproblem_x(g.xs, g.ys, reg, 0.5))
    new = Geometry2D(r.x[:-1], g.ys)
    # linearised spacing is conservative and the surrogate bounds G from below
    assert new.is_feasible(reg, 0.5, atol=1e-7)
    assert minmax_delta(new) >= r.x[-1] - 1e-7


def test_subproblem_errors():
    reg = Region.square(5.0)
    with pytest.raises(DegenerateInputError):
        build_subproblem_x([0, 1, 2], [1, 1, 1], reg, 0.5)
    with pytest.raises(PerturbationRequired):
        build_subproblem_x([0, 0, 2], [1, 1, 2], reg, 0.5)


def test_circle_subproblem_builds():
    reg = Region.circle(2.0)
    g = circular_optimal(8, 1.5, 0.5)
    p = build_subproblem_x(g.xs, g.ys, reg, 0.5)
    assert len(p.quads) == 1 + 8
    assert p.max_violation(np.r_[g.xs, 0.0]) <= 1e-9


@pytest.fixture(scope="module")
def square_run():
    sc = SensingScene.from_snr_db(16, SpatialAngles(0.35, 0.71), 15.0)
    reg = Region.square(5.0)
    return sc, reg, optimize_2d(sc, reg)


def test_sca_improves_and_stays_feasible(square_run):
    sc, reg, (g, trace) = square_run
    assert trace.status in ("converged", "max-iterations")
    d = trace.outer_deltas
    assert np.all(np.diff(d) >= -1e-8)
    b = region_bounds(sc, reg)
    assert b.delta_lower - 1e-9 <= d[-1] <= b.delta_upper + 1e-9
    assert g.is_feasible(reg, 0.5, atol=1e-6)
    assert minmax_crb(crb_2d(sc, g)) <= minmax_crb(crb_2d(sc, upa_full(16, reg)))
    assert all(s == "optimal" for s in trace.subproblem_statuses)


def test_sca_trace_csv(square_run, tmp_path):
    _, _, (_, trace) = square_run
    text = trace.to_csv(tmp_path / "t.csv")
    lines = text.splitlines()
    assert lines[0] == "iteration,delta,phase,inner_iters,solver_status,spacing_violation,region_violation"
    assert len(lines) == len(trace.records) + 1
    assert (tmp_path / "t.csv").read_text() == text


def test_sca_shortcut_when_init_is_optimal():
    reg = Region.circle(1.0)
    init = circular_optimal(8, 1.0, 0.5)
    sc = SensingScene(8, SpatialAngles(0.0), min_spacing=0.5)
    g, trace = optimize_2d(sc, reg, init=init)
    assert trace.status == "converged" and g == init and trace.n_outer == 0


def test_sca_circle_region():
    reg = Region.circle(2.0)
    sc = SensingScene(12, SpatialAngles(0.0), min_spacing=0.5)
    init = Geometry2D.from_points(
        [[r * math.cos(t), r * math.sin(t)] for r, k in ((1.0, 6), (1.9, 6))
         for t in np.arange(k) * 2 * math.pi / k + (0.3 if r > 1 else 0)])
    g, trace = optimize_2d(sc, reg, ScaConfig(max_outer=15), init=init)
    assert g.is_feasible(reg, 0.5, atol=1e-6)
    assert trace.outer_deltas[-1] >= minmax_delta(init) - 1e-9
    assert trace.outer_deltas[-1] <= 2.0 + 1e-9


def test_sca_polygon_region():
    reg = Region.polygon([[0, 0], [4, 0], [5, 3], [1, 4]])
    sc = SensingScene(9, SpatialAngles(0.0), min_spacing=0.5)
    g, trace = optimize_2d(sc, reg, ScaConfig(max_outer=10))
    assert g.is_feasible(reg, 0.5, atol=1e-6)
    assert np.all(np.diff(trace.outer_deltas) >= -1e-8)


def test_sca_rejects_collinear_init():
    reg = Region.square(5.0)
    sc = SensingScene(4, SpatialAngles(0.0), min_spacing=0.5)
    with pytest.raises(DegenerateInputError):
        optimize_2d(sc, reg, init=Geometry2D([0, 1, 2, 3], [1, 1, 1, 1]))


def test_sca_rejects_infeasible_init():
    reg = Region.square(5.0)
    sc = SensingScene(4, SpatialAngles(0.0), min_spacing=0.5)
    with pytest.raises(InfeasibleError):
        optimize_2d(sc, reg, init=Geometry2D([0, 0.1, 2, 3], [0, 0, 1, 6]))


def test_sca_restarts_never_worse():
    reg = Region.square(3.0)
    sc = SensingScene(6, SpatialAngles(0.0), min_spacing=0.5)
    base, _ = optimize_2d(sc, reg, ScaConfig(max_outer=5))
    best, _ = optimize_2d(sc, reg, ScaConfig(max_outer=5, restarts=2, seed=4))
    assert minmax_delta(best) >= minmax_delta(base) - 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        ScaConfig(eps=0)
    with pytest.raises(ValueError):
        ScaConfig(max_inner=0)
