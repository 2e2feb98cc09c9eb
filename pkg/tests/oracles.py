"""Independent reference computations used by the tests."""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import NonlinearConstraint, minimize

from ma_lab.socp import ConicProgram


def random_program(rng: np.random.Generator, n: int) -> ConicProgram:
    """Bounded program with the origin strictly feasible: box, random cuts, one
    convex quadratic and one rotated cone."""
    c = rng.normal(size=n)
    prog = ConicProgram(n, c / np.linalg.norm(c))
    prog.add_linear_block(np.vstack([np.eye(n), -np.eye(n)]), np.ones(2 * n))
    for _ in range(rng.integers(0, 3)):
        a = rng.normal(size=n)
        prog.add_linear(a, rng.uniform(0.1, 1.0) * np.linalg.norm(a))
    m = rng.normal(size=(n, n))
    prog.add_quadratic(m @ m.T / n + 0.1 * np.eye(n), rng.normal(scale=0.2, size=n),
                       -rng.uniform(0.2, 1.0))
    d, f = rng.uniform(0.5, 1.5, 2)
    prog.add_rotated_cone(rng.normal(size=n), rng.uniform(-0.3, 0.3), rng.normal(scale=0.5, size=n),
                          d, rng.normal(scale=0.5, size=n), f)
    return prog


def _feasible_mask(prog: ConicProgram, pts: np.ndarray) -> np.ndarray:
    ok = np.all(pts @ prog.A.T <= prog.b + 1e-12, axis=1) if prog.A.size else np.ones(len(pts), bool)
    for qc in prog.quads:
        ok &= np.einsum("ij,jk,ik->i", pts, qc.Q, pts) + pts @ qc.q + qc.r <= 0
    for cc in prog.cones:
        w = pts @ cc.a + cc.b
        s = pts @ cc.c + cc.d
        t = pts @ cc.e + cc.f
        ok &= (w * w <= s * t) & (s >= 0) & (t >= 0)
    return ok


def grid_oracle(prog: ConicProgram, step: float = 1e-3, lo: float = -1.0, hi: float = 1.0,
                refine: bool = True) -> float:
    """Best objective over a dense grid of the box (programs with at most two variables).

    With ``refine`` a second grid at ``step / 10`` is laid around the coarse optimum.
    """
    n = prog.n
    if n > 2:
        raise ValueError("grid oracle is limited to two variables")
    axis = np.arange(lo, hi + step / 2, step)
    pts = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), -1).reshape(-1, n)
    ok = _feasible_mask(prog, pts)
    if not ok.any():
        return -math.inf
    vals = np.where(ok, pts @ prog.c, -np.inf)
    best = pts[int(np.argmax(vals))]
    out = float(vals.max())
    if refine:
        fine = np.arange(-2 * step, 2 * step + step / 20, step / 10)
        local = np.stack(np.meshgrid(*([fine] * n), indexing="ij"), -1).reshape(-1, n) + best
        ok = _feasible_mask(prog, local)
        if ok.any():
            out = max(out, float((local[ok] @ prog.c).max()))
    return out


def _constraint_jacobian(prog: ConicProgram, z: np.ndarray) -> np.ndarray:
    rows = [prog.A] if prog.A.size else []
    for qc in prog.quads:
        rows.append((2 * qc.Q @ z + qc.q)[None, :])
    for cc in prog.cones:
        w, s, t = cc.a @ z + cc.b, cc.c @ z + cc.d, cc.e @ z + cc.f
        rows.append((2 * w * cc.a - t * cc.c - s * cc.e)[None, :])
    return np.vstack(rows)


def _smooth_values(prog: ConicProgram, z: np.ndarray) -> np.ndarray:
    # cones as w^2 - s t (smooth); valid inside the region where both factors stay positive
    out = [prog.A @ z - prog.b] if prog.A.size else []
    out += [np.array([z @ qc.Q @ z + qc.q @ z + qc.r]) for qc in prog.quads]
    for cc in prog.cones:
        w, s, t = cc.a @ z + cc.b, cc.c @ z + cc.d, cc.e @ z + cc.f
        out.append(np.array([w * w - s * t]))
    return np.concatenate(out)


def multistart_oracle(prog: ConicProgram, rng: np.random.Generator, starts: int = 4) -> float:
    """Best SLSQP objective from several starts; exact up to solver tolerance on convex programs."""
    cons = {"type": "ineq", "fun": lambda z: -_smooth_values(prog, z),
            "jac": lambda z: -_constraint_jacobian(prog, z)}
    best = -math.inf
    for _ in range(starts):
        z0 = rng.uniform(-0.05, 0.05, prog.n)
        res = minimize(lambda z: -prog.c @ z, z0, jac=lambda z: -prog.c, constraints=cons,
                       method="SLSQP", options={"ftol": 1e-12, "maxiter": 500})
        if res.success and prog.max_violation(res.x) <= 1e-7:
            best = max(best, float(prog.c @ res.x))
    if best == -math.inf:
        nl = NonlinearConstraint(lambda z: prog.constraint_values(z), -np.inf, 0.0)
        res = minimize(lambda z: -prog.c @ z, np.zeros(prog.n), jac=lambda z: -prog.c,
                       constraints=[nl], method="trust-constr",
                       options={"gtol": 1e-12, "xtol": 1e-12, "maxiter": 5000})
        if prog.max_violation(res.x) <= 1e-7:
            best = float(prog.c @ res.x)
    return best


def brute_force_1d(length: float, spacing: float, n: int, step: float) -> tuple[float, np.ndarray]:
    """Largest variance over all sorted grid placements with the given spacing."""
    axis = np.round(np.arange(0.0, length + step / 2, step), 12)
    best, arg = -1.0, None
    for combo in itertools.combinations(axis, n):
        x = np.array(combo)
        if np.all(np.diff(x) >= spacing - 1e-12):
            v = float(np.var(x))
            if v > best:
                best, arg = v, x
    return best, arg
