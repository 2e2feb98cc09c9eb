"""Uniform reference layouts: half-wavelength and full-aperture ULAs and UPAs."""
from __future__ import annotations

import math

import numpy as np

from .array import Geometry1D, Geometry2D, Region
from .errors import InfeasibleError

__all__ = ["ula_half", "ula_full", "upa_half", "upa_full", "generate_baseline", "fit_into_region"]

HALF = 0.5


def ula_half(n: int, length: float | None = None) -> Geometry1D:
    g = Geometry1D(HALF * np.arange(n))
    if length is not None and g.positions[-1] > length + 1e-12:
        raise InfeasibleError(f"ULAH with N = {n} spans {g.positions[-1]:.6g} > A = {length:.6g}")
    return g


def ula_full(n: int, length: float) -> Geometry1D:
    return Geometry1D(np.linspace(0.0, length, n))


def _grid(n: int, spacing: float) -> np.ndarray:
    side = math.isqrt(n - 1) + 1  # ceil(sqrt(n))
    k = np.arange(n)
    # row-major: fill along x first, then move up one row
    return np.column_stack([(k % side) * spacing, (k // side) * spacing])


def upa_half(n: int, region: Region | None = None) -> Geometry2D:
    pts = _grid(n, HALF)
    if region is not None:
        # centred on the region; the CRB does not depend on translation
        pts = pts - (pts.max(axis=0) + pts.min(axis=0)) / 2 + np.asarray(region.centroid)
        if not region.contains(pts, 1e-12):
            raise InfeasibleError(f"UPAH with N = {n} does not fit in the region")
    return Geometry2D.from_points(pts)


def upa_full(n: int, region: Region) -> Geometry2D:
    """Grid with ``ceil(sqrt(N))`` points per side spanning the region's bounding box,
    shrunk about the region centroid when the region is not a square."""
    side = math.isqrt(n - 1) + 1
    x0, y0, x1, y1 = region.bounding_box()
    span = min(x1 - x0, y1 - y0)
    spacing = span / (side - 1) if side > 1 else 0.0
    pts = _grid(n, spacing) + [x0, y0]
    if region.kind != "square":
        pts = fit_into_region(pts, region)
    return Geometry2D.from_points(pts)


def fit_into_region(points, region: Region, centre=None) -> np.ndarray:
    """Scale ``points`` about ``centre`` (default: the region centroid) by the largest
    factor in ``(0, 1]`` that puts every point inside the region."""
    pts = np.asarray(points, float)
    c = np.asarray(region.centroid if centre is None else centre, float)
    grid_c = (pts.max(axis=0) + pts.min(axis=0)) / 2
    rel = pts - grid_c
    if region.contains(c + rel, 1e-12):
        return c + rel
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if region.contains(c + mid * rel, 0.0):
            lo = mid
        else:
            hi = mid
    return c + lo * rel


def generate_baseline(scheme: str, n: int, length: float | None = None,
                      region: Region | None = None):
    scheme = scheme.lower()
    if scheme == "ulah":
        return ula_half(n, length)
    if scheme == "ulaf":
        if length is None:
            raise ValueError("ULAF needs the segment length A")
        return ula_full(n, length)
    if scheme == "upah":
        return upa_half(n, region)
    if scheme == "upaf":
        if region is None:
            raise ValueError("UPAF needs a region")
        return upa_full(n, region)
    raise ValueError(f"unknown baseline scheme {scheme!r}")
