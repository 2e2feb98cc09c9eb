"""Planar placement: the circular construction and alternating SCA for convex regions.

The min-max CRB problem maximises ``delta`` subject to

    G(x, y) = x^T B x - (x^T B y)^2 / (y^T B y) >= delta
    G(y, x) >= delta
    r_n in region, ||r_k - r_l|| >= D

Each half-step fixes one coordinate vector and replaces the nonconvex terms by
surrogates that are tight at the current point: the convex ``x^T B x`` by its
tangent plane, and every pair distance by its projection on the current pair
direction. The resulting convex subproblem is solved by :mod:`ma_lab.socp`.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .array import Geometry2D, Region, SensingScene, centering_matrix
from .baselines import upa_full
from .crb import enclosing_circles, minmax_delta
from .errors import (DegenerateInputError, InfeasibleError, PerturbationRequired,
                     UnsupportedConfiguration)
from .socp import ConicProgram, solve

__all__ = [
    "RotationGroups",
    "ScaConfig",
    "ScaTrace",
    "circular_optimal",
    "rotation_schedule",
    "build_subproblem_x",
    "build_subproblem_y",
    "optimize_2d",
    "surrogate_g1",
]

log = logging.getLogger(__name__)

COINCIDENT_TOL = 1e-9


@dataclass(frozen=True)
class RotationGroups:
    k: int
    rho: tuple
    radius: float
    spacing: float

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        object.__setattr__(self, "rho", rho)
        if len(rho) != self.k:
            raise InfeasibleError(f"expected {self.k} angles, got {len(rho)}")
        if any(r < 0 or r >= math.pi / 2 for r in rho):
            raise InfeasibleError("rotation angles must lie in [0, pi/2)")
        need = 2 * math.asin(min(1.0, self.spacing / (2 * self.radius)))
        gaps = [rho[i] - rho[i - 1] for i in range(1, self.k)]
        gaps.append(rho[0] - rho[-1] + math.pi / 2)
        if any(g <= 0 for g in gaps[:-1]):
            raise InfeasibleError("rotation angles must be strictly increasing")
        worst = min(gaps)
        if worst < need - 1e-12:
            raise InfeasibleError(
                f"angular gap {worst:.6g} < 2 asin(D / 2A) = {need:.6g}")


def rotation_schedule(k: int, radius: float, spacing: float) -> RotationGroups:
    """Evenly spaced group rotations ``rho_k = (k - 1) pi / (2K)``."""
    if k < 1:
        raise UnsupportedConfiguration("need at least one group of four antennas")
    if spacing > 2 * radius * math.sin(math.pi / (4 * k)) * (1 + 1e-12):
        raise InfeasibleError(
            f"D = {spacing:.6g} exceeds 2 A sin(pi/N) = "
            f"{2 * radius * math.sin(math.pi / (4 * k)):.6g} for N = {4 * k}, A = {radius:.6g}")
    return RotationGroups(k, tuple(i * math.pi / (2 * k) for i in range(k)), radius, spacing)


def circular_optimal(n: int, radius: float, spacing: float, rho=None,
                     center=(0.0, 0.0)) -> Geometry2D:
    """``K = N/4`` groups of four antennas on the circle, each group a square rotated
    by ``rho_k``. Attains ``var_x = var_y = A^2/2`` with zero covariance."""
    if n % 4 != 0 or n <= 0:
        raise UnsupportedConfiguration(
            f"the circular construction needs N = 4K antennas; got N = {n}")
    k = n // 4
    groups = (rotation_schedule(k, radius, spacing) if rho is None
              else RotationGroups(k, tuple(rho), radius, spacing))
    ang = (np.asarray(groups.rho)[:, None] + np.arange(4)[None, :] * (math.pi / 2)).ravel()
    xs = radius * np.cos(ang)
    ys = radius * np.sin(ang)
    # cos/sin of multiples of pi/2 leave ~1e-16 residue; snap it
    xs[np.abs(xs) < 1e-15 * radius] = 0.0
    ys[np.abs(ys) < 1e-15 * radius] = 0.0
    return Geometry2D(xs + center[0], ys + center[1])


@dataclass(frozen=True)
class ScaConfig:
    eps: float = 1e-4
    eps_x: float = 1e-2
    eps_y: float = 1e-2
    max_outer: int = 100
    max_inner: int = 50
    solver_tol: float = 1e-8
    init: str = "upaf"
    restarts: int = 0
    jitter: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not (self.eps > 0 and self.eps_x > 0 and self.eps_y > 0):
            raise ValueError("convergence thresholds must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be at least 1")


@dataclass
class ScaTrace:
    """One record per subproblem solve plus one per completed outer iteration."""

    records: list = field(default_factory=list)
    status: str = "running"
    failed_iteration: int | None = None
    message: str = ""

    def add(self, **rec) -> None:
        self.records.append(rec)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([r["delta"] for r in self.records])

    @property
    def outer_deltas(self) -> np.ndarray:
        return np.array([r["delta"] for r in self.records if r["phase"] in ("init", "outer")])

    @property
    def subproblem_statuses(self) -> list:
        return [r["solver_status"] for r in self.records if r["phase"] in ("x", "y")]

    @property
    def n_outer(self) -> int:
        return sum(1 for r in self.records if r["phase"] == "outer")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "delta", "phase", "inner_iters", "solver_status",
                    "spacing_violation", "region_violation"])
        for r in self.records:
            w.writerow([r["iteration"], repr(float(r["delta"])), r["phase"], r["inner_iters"],
                        r["solver_status"], repr(float(r["spacing_violation"])),
                        repr(float(r["region_violation"]))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def surrogate_g1(x, x_ref) -> float:
    """Tangent-plane minorant of ``x^T B x`` at ``x_ref``: ``2 x_ref^T B x - x_ref^T B x_ref``."""
    x = np.asarray(x, float)
    xr = np.asarray(x_ref, float)
    bxr = xr - xr.mean()
    return float(2 * bxr @ x / x.size - bxr @ xr / x.size)


def _pair_index(n: int):
    return np.triu_indices(n, 1)


def build_subproblem_x(x_ref, y, region: Region, spacing: float) -> ConicProgram:
    """Convex program in ``(x_1..x_N, delta)`` for the x half-step at ``x_ref`` with ``y`` fixed."""
    xp = np.asarray(x_ref, float).ravel()
    y = np.asarray(y, float).ravel()
    n = xp.size
    if y.size != n:
        raise ValueError("x_ref and y differ in length")
    B = centering_matrix(n)
    by = B @ y
    vy = float(y @ by)
    if vy <= 1e-14 * max(1.0, float(y @ y) / n):
        raise DegenerateInputError("var(y) = 0: the fixed coordinates are collinear")
    bxp = B @ xp
    g1p = float(xp @ bxp)

    names = [f"x{i}" for i in range(n)] + ["delta"]
    prog = ConicProgram(n + 1, np.r_[np.zeros(n), 1.0], names)
    a = np.r_[by, 0.0]
    # tangent-plane G1 minus (y^T B x)^2 / var(y) >= delta
    prog.add_quadratic(np.outer(a, a) / vy, np.r_[-2 * bxp, 1.0], g1p, name="G(x,y)")
    # (y^T B x)^2 <= (2 x_p^T B x - G1(x_p)) (var(y) - delta)
    e = np.zeros(n + 1)
    e[-1] = -1.0
    prog.add_rotated_cone(a, 0.0, np.r_[2 * bxp, 0.0], -g1p, e, vy, name="G(y,x)")

    # linearised spacing: (r_k^p - r_l^p).(r_k - r_l) / ||r_k^p - r_l^p|| >= D
    ki, li = _pair_index(n)
    dx = xp[ki] - xp[li]
    dy = y[ki] - y[li]
    dist = np.hypot(dx, dy)
    if np.any(dist < COINCIDENT_TOL):
        j = int(np.argmin(dist))
        raise PerturbationRequired(f"antennas {ki[j]} and {li[j]} coincide at the reference")
    rows = np.zeros((ki.size, n + 1))
    coef = dx / dist
    rows[np.arange(ki.size), ki] = -coef
    rows[np.arange(ki.size), li] = coef
    prog.add_linear_block(rows, dy * dy / dist - spacing, name="spacing")

    _add_region_x(prog, region, y, n)
    return prog


def _add_region_x(prog: ConicProgram, region: Region, y: np.ndarray, n: int) -> None:
    if region.kind == "circle":
        cx, cy = region.center
        for i in range(n):
            Q = np.zeros((n + 1, n + 1))
            Q[i, i] = 1.0
            q = np.zeros(n + 1)
            q[i] = -2 * cx
            prog.add_quadratic(Q, q, cx * cx + (y[i] - cy) ** 2 - region.radius**2,
                               name=f"region{i}")
        return
    A, b = region.halfspaces()
    for ax, ay, bb in zip(A[:, 0], A[:, 1], b):
        if abs(ax) < 1e-14:
            continue  # constrains only the fixed coordinate
        rows = np.zeros((n, n + 1))
        rows[np.arange(n), np.arange(n)] = ax
        prog.add_linear_block(rows, bb - ay * y, name="region")


def build_subproblem_y(y_ref, x, region: Region, spacing: float) -> ConicProgram:
    """The y half-step: the x program with the axes exchanged."""
    prog = build_subproblem_x(y_ref, x, region.transposed(), spacing)
    n = prog.n - 1
    prog.var_names = [f"y{i}" for i in range(n)] + ["delta"]
    return prog


def _true_delta(x, y) -> float:
    return minmax_delta(Geometry2D(x, y))


def _violations(x, y, region: Region, spacing: float) -> tuple[float, float]:
    g = Geometry2D(x, y)
    return max(0.0, spacing - g.min_distance()), region.violation(g.points)


def _perturb_coincident(x, y, spacing, rng) -> tuple[np.ndarray, np.ndarray]:
    x, y = x.copy(), y.copy()
    n = x.size
    ki, li = _pair_index(n)
    dist = np.hypot(x[ki] - x[li], y[ki] - y[li])
    for j in np.flatnonzero(dist < COINCIDENT_TOL):
        ang = rng.uniform(0, 2 * math.pi)
        x[li[j]] += spacing / 100 * math.cos(ang)
        y[li[j]] += spacing / 100 * math.sin(ang)
    return x, y


def _half_step(axis: str, moving, fixed, region, spacing, cfg: ScaConfig, trace: ScaTrace,
               outer: int, rng):
    """Repeated subproblem solves for one coordinate vector.

    Returns ``(moving, ok)``; on solver failure the last feasible ``moving`` is kept.
    """
    build = build_subproblem_x if axis == "x" else build_subproblem_y
    threshold = cfg.eps_x if axis == "x" else cfg.eps_y
    pair = (lambda m: (m, fixed)) if axis == "x" else (lambda m: (fixed, m))
    prev = _true_delta(*pair(moving))
    for inner in range(1, cfg.max_inner + 1):
        try:
            prog = build(moving, fixed, region, spacing)
        except PerturbationRequired:
            xs, ys = pair(moving)
            xs, ys = _perturb_coincident(np.asarray(xs), np.asarray(ys), spacing, rng)
            moving = xs if axis == "x" else ys
            prog = build(moving, fixed, region, spacing)
        start = np.r_[moving, prev - max(1.0, abs(prev))]
        res = solve(prog, tol=cfg.solver_tol, strictly_feasible_start=start)
        if res.status != "optimal" or res.x is None:
            sv, rv = _violations(*pair(moving), region, spacing)
            trace.add(iteration=outer, delta=_true_delta(*pair(moving)), phase=axis,
                      inner_iters=inner, solver_status=res.status,
                      spacing_violation=sv, region_violation=rv)
            trace.status = "solver-failure"
            trace.failed_iteration = outer
            trace.message = f"{axis}-subproblem {inner} of outer iteration {outer}: {res.message}"
            log.warning("SCA %s", trace.message)
            return moving, False
        moving = res.x[:-1]
        sub_delta = float(res.x[-1])
        sv, rv = _violations(*pair(moving), region, spacing)
        trace.add(iteration=outer, delta=_true_delta(*pair(moving)), phase=axis,
                  inner_iters=inner, solver_status=res.status,
                  spacing_violation=sv, region_violation=rv, subproblem_delta=sub_delta)
        if sub_delta - prev <= threshold:
            break
        prev = sub_delta
    return moving, True


def default_init(region: Region, n: int, spacing: float) -> Geometry2D:
    g = upa_full(n, region)
    if g.min_distance() < spacing - 1e-12:
        raise InfeasibleError(
            f"UPAF initialisation has spacing {g.min_distance():.4g} < D = {spacing:.4g}")
    return g


def optimize_2d(scene: SensingScene, region: Region, config: ScaConfig | None = None,
                init: Geometry2D | None = None) -> tuple[Geometry2D, ScaTrace]:
    """Alternating SCA maximisation of the min-max variance term ``delta``.

    With ``config.restarts > 0`` the run is repeated from jittered copies of
    the initial layout and the best result is kept.
    """
    cfg = config or ScaConfig()
    spacing = scene.min_spacing
    if init is None:
        init = default_init(region, scene.n, spacing)
    best = _optimize_once(region, spacing, cfg, init)
    rng = np.random.default_rng(cfg.seed)
    for r in range(cfg.restarts):
        start = _jittered(init, region, spacing, cfg.jitter, rng)
        if start is None:
            continue
        cand = _optimize_once(region, spacing, cfg, start)
        if minmax_delta(cand[0]) > minmax_delta(best[0]):
            best = cand
    return best


def _jittered(init: Geometry2D, region, spacing, scale, rng, tries: int = 50):
    for _ in range(tries):
        pts = init.points + rng.normal(scale=scale, size=init.points.shape)
        g = Geometry2D.from_points(pts)
        if g.is_feasible(region, spacing):
            return g
    return None


def _optimize_once(region: Region, spacing: float, cfg: ScaConfig,
                   init: Geometry2D) -> tuple[Geometry2D, ScaTrace]:
    init.check(region, spacing)
    x, y = init.xs.copy(), init.ys.copy()
    if np.var(x) <= 0 or np.var(y) <= 0:
        raise DegenerateInputError("initial layout is collinear (zero coordinate variance)")
    rng = np.random.default_rng(cfg.seed)
    trace = ScaTrace()
    delta = _true_delta(x, y)
    trace.add(iteration=0, delta=delta, phase="init", inner_iters=0, solver_status="-",
              spacing_violation=0.0, region_violation=0.0)
    _, a_cir = enclosing_circles(region)
    ceiling = a_cir**2 / 2
    if delta >= ceiling * (1 - 1e-12):
        trace.status = "converged"
        trace.message = "initial layout attains the circumscribed-circle bound"
        return Geometry2D(x, y), trace

    for outer in range(1, cfg.max_outer + 1):
        x, ok = _half_step("x", x, y, region, spacing, cfg, trace, outer, rng)
        if ok:
            y, ok = _half_step("y", y, x, region, spacing, cfg, trace, outer, rng)
        new = _true_delta(x, y)
        sv, rv = _violations(x, y, region, spacing)
        trace.add(iteration=outer, delta=new, phase="outer", inner_iters=0,
                  solver_status="ok" if ok else "failed", spacing_violation=sv,
                  region_violation=rv)
        if not ok:
            return Geometry2D(x, y), trace
        gain = new - delta
        delta = new
        if gain <= cfg.eps:
            trace.status = "converged"
            break
    else:
        trace.status = "max-iterations"
    return Geometry2D(x, y), trace
