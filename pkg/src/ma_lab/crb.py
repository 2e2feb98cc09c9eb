"""Cramer-Rao bounds for planar and linear movable-antenna arrays.

The bounds depend on the geometry only through the position statistics:

    CRB_u = c / var(x)                                  (linear array)
    CRB_u = c / (var(x) - cov(x, y)^2 / var(y))         (planar array)

with ``c = sigma^2 lambda^2 / (8 pi^2 T P N |beta|^2)``. Region-level bounds
follow from the radii of the minimum circumscribed and maximum inscribed
circles of the movement region.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .array import Geometry1D, Geometry2D, PositionStats, Region, SensingScene, position_stats
from .errors import DegenerateInputError, GeometryError

__all__ = [
    "CrbReport",
    "RegionBounds",
    "crb_1d",
    "crb_2d",
    "minmax_crb",
    "minmax_delta",
    "enclosing_circles",
    "min_enclosing_circle",
    "max_inscribed_circle",
    "region_bounds",
]

_REL_EPS = 1e-13


@dataclass(frozen=True)
class CrbReport:
    prefactor: float
    crb_u: float
    crb_v: float | None
    stats: PositionStats
    degenerate: bool = False
    collinear: bool = False

    @property
    def is_2d(self) -> bool:
        return self.crb_v is not None

    def to_dict(self) -> dict:
        return {
            "prefactor": self.prefactor,
            "crb_u": self.crb_u,
            "crb_v": self.crb_v,
            "var_x": self.stats.var_x,
            "var_y": self.stats.var_y,
            "cov_xy": self.stats.cov_xy,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class RegionBounds:
    a_ins: float
    a_cir: float
    delta_upper: float
    delta_lower: float
    crb_lower: float
    crb_upper: float
    # True when N = 4K and D <= 2 a_ins sin(pi/N); otherwise delta_lower and
    # crb_upper come from a construction that may not fit in the region
    lower_attained: bool


def crb_1d(scene: SensingScene, geometry: Geometry1D) -> CrbReport:
    st = position_stats(geometry)
    pref = scene.prefactor
    scale = st.mean_x**2 + float(np.max(np.abs(geometry.positions))) ** 2
    if st.var_x <= _REL_EPS * max(scale, 1e-300):
        return CrbReport(pref, math.inf, None, st, degenerate=True)
    return CrbReport(pref, pref / st.var_x, None, st)


def crb_2d(scene: SensingScene, geometry: Geometry2D) -> CrbReport:
    st = position_stats(geometry)
    pref = scene.prefactor
    det = st.var_x * st.var_y - st.cov_xy**2
    if det <= _REL_EPS * max(st.var_x * st.var_y, 0.0) or st.var_x <= 0 or st.var_y <= 0:
        return CrbReport(pref, math.inf, math.inf, st, degenerate=True, collinear=True)
    # var_x - cov^2/var_y = det/var_y
    return CrbReport(pref, pref * st.var_y / det, pref * st.var_x / det, st)


def minmax_crb(report: CrbReport) -> float:
    if report.crb_v is None:
        raise GeometryError("min-max CRB needs a planar (2D) report")
    return max(report.crb_u, report.crb_v)


def minmax_delta(geometry: Geometry2D) -> float:
    """``min(var_x - cov^2/var_y, var_y - cov^2/var_x)``; zero for collinear arrays."""
    st = position_stats(geometry)
    if st.var_x <= 0 or st.var_y <= 0:
        return 0.0
    det = st.var_x * st.var_y - st.cov_xy**2
    return max(0.0, min(det / st.var_y, det / st.var_x))


def _circle_two(a, b):
    c = (a + b) / 2
    return c, float(np.linalg.norm(a - c))


def _circle_three(a, b, c):
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-14:
        # collinear: the widest pair decides
        best = max(((a, b), (a, c), (b, c)), key=lambda p: np.linalg.norm(p[0] - p[1]))
        return _circle_two(*best)
    ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / d
    uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / d
    ctr = np.array([ux, uy])
    return ctr, float(np.linalg.norm(a - ctr))


def min_enclosing_circle(points, seed: int = 0) -> tuple[np.ndarray, float]:
    """Smallest circle containing ``points`` (randomised incremental Welzl)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise GeometryError("no points")
    pts = pts[np.random.default_rng(seed).permutation(pts.shape[0])]
    scale = max(float(np.max(np.abs(pts))), 1.0)
    tol = 1e-12 * scale

    def inside(c, r, p):
        return np.linalg.norm(p - c) <= r + tol

    c, r = pts[0].copy(), 0.0
    for i in range(1, len(pts)):
        if inside(c, r, pts[i]):
            continue
        c, r = pts[i].copy(), 0.0
        for j in range(i):
            if inside(c, r, pts[j]):
                continue
            c, r = _circle_two(pts[i], pts[j])
            for k in range(j):
                if not inside(c, r, pts[k]):
                    c, r = _circle_three(pts[i], pts[j], pts[k])
    return c, r


def max_inscribed_circle(region: Region) -> tuple[np.ndarray, float]:
    """Largest circle inside a square or polygon (Chebyshev centre via an LP)."""
    if region.kind == "circle":
        return np.array(region.center), region.radius
    a, b = region.halfspaces()
    norms = np.linalg.norm(a, axis=1)
    # maximize r  s.t.  a_i . c + r ||a_i|| <= b_i
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=np.column_stack([a, norms]), b_ub=b,
                  bounds=[(None, None), (None, None), (0, None)], method="highs")
    if res.status != 0 or res.x[2] <= 0:
        raise DegenerateInputError("region has an empty interior")
    return res.x[:2], float(res.x[2])


def enclosing_circles(region: Region) -> tuple[float, float]:
    """``(a_ins, a_cir)``: radii of the maximum inscribed and minimum circumscribed circles."""
    if region.kind == "circle":
        return region.radius, region.radius
    if region.kind == "square":
        return region.side / 2, region.side / math.sqrt(2)
    _, a_ins = max_inscribed_circle(region)
    _, a_cir = min_enclosing_circle(region.vertices)
    return a_ins, a_cir


def region_bounds(scene: SensingScene, region: Region) -> RegionBounds:
    a_ins, a_cir = enclosing_circles(region)
    n, d = scene.n, scene.min_spacing
    # sigma^2 lambda^2 / (4 pi^2 T P N |beta|^2 a^2) = 2 * prefactor / a^2
    two_c = 2 * scene.prefactor
    attained = (n % 4 == 0) and d <= 2 * a_ins * math.sin(math.pi / n) + 1e-12
    return RegionBounds(
        a_ins=a_ins,
        a_cir=a_cir,
        delta_upper=a_cir**2 / 2,
        delta_lower=a_ins**2 / 2,
        crb_lower=two_c / a_cir**2,
        crb_upper=two_c / a_ins**2,
        lower_attained=attained,
    )
