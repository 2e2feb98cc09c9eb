"""Closed-form optimal placement on a line segment.

Maximising ``var(x)`` over ``0 <= x_1``, ``x_N <= A`` and ``x_n - x_{n-1} >= D``
is solved by packing the first ``floor(N/2)`` antennas at the left end and the
rest at the right end, each group at the minimum spacing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array import Geometry1D, SensingScene
from .crb import crb_1d
from .errors import InfeasibleError

__all__ = ["Segment1D", "optimal_apv_1d", "p_closed_form", "adjustment_sweep", "min_crb_1d"]


@dataclass(frozen=True)
class Segment1D:
    length: float
    min_spacing: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise InfeasibleError(f"N = {self.n} < 2")
        if not (self.length > 0 and self.min_spacing > 0):
            raise InfeasibleError("A and D must be positive")
        need = (self.n - 1) * self.min_spacing
        # relative slack so that A = (N-1) D computed in floating point still passes
        if self.length < need * (1 - 1e-12):
            raise InfeasibleError(
                f"A = {self.length:.6g} < (N-1) D = {need:.6g}: "
                f"{self.n} antennas do not fit at spacing {self.min_spacing:.6g}")


def optimal_apv_1d(seg: Segment1D) -> Geometry1D:
    n, a, d = seg.n, seg.length, seg.min_spacing
    half = n // 2
    idx = np.arange(1, n + 1)
    x = np.where(idx <= half, (idx - 1) * d, a - (n - idx) * d)
    return Geometry1D(x)


def p_closed_form(seg: Segment1D) -> float:
    """Variance of the optimal placement, ``p(A, N, D)``."""
    n, a, d = seg.n, seg.length, seg.min_spacing
    core = 3 * a * a - 3 * (n - 2) * d * a
    if n % 2 == 0:
        return (core + (n - 2) * (n - 1) * d * d) / 12
    return (n - 1) * (n + 1) / (12 * n * n) * (core + (n * n - 3 * n + 3) * d * d)


def adjustment_sweep(x0: Geometry1D, seg: Segment1D) -> list[Geometry1D]:
    """The ``N`` intermediate placements that move ``x0`` onto the optimum one antenna
    at a time: left half from the left, then the right half from the right end inward.
    Each step keeps the placement feasible and never lowers its variance."""
    if x0.n != seg.n:
        raise InfeasibleError(f"x0 has {x0.n} antennas, segment expects {seg.n}")
    x0.check(seg.length, seg.min_spacing)
    target = optimal_apv_1d(seg).positions
    n, half = seg.n, seg.n // 2
    x = x0.positions.copy()
    out = []
    for k in range(1, n + 1):
        j = k if k <= half else n - k + half + 1
        x[j - 1] = target[j - 1]
        out.append(Geometry1D(x.copy()))
    return out


def min_crb_1d(scene: SensingScene, seg: Segment1D) -> float:
    return scene.prefactor / p_closed_form(seg)


def crb_ratio_vs(scene: SensingScene, seg: Segment1D, baseline: Geometry1D) -> float:
    """CRB of the optimal placement divided by the CRB of ``baseline``."""
    base = crb_1d(scene, baseline).crb_u
    if math.isinf(base):
        return 0.0
    return min_crb_1d(scene, seg) / base
