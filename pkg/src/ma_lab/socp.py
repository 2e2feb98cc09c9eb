"""Small dense conic programs solved with a primal log-barrier interior-point method.

A :class:`ConicProgram` maximises ``c^T z`` subject to

* linear inequalities ``a^T z <= b``,
* convex quadratics ``z^T Q z + q^T z + r <= 0`` with ``Q`` PSD,
* rotated cones ``(a^T z + b)^2 <= (c^T z + d)(e^T z + f)``.

Cones use the barrier ``-log((c.z+d)(e.z+f) - (a.z+b)^2)``, which stays regular
at the cone apex; linear and quadratic constraints use ``-log(-g(z))``. Each
stage minimises the barrier by damped Newton steps and the barrier weight
grows tenfold per stage. A phase-I problem supplies the strictly feasible
starting point when none is given.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

__all__ = [
    "ConicProgram",
    "QuadConstraint",
    "RotatedCone",
    "SolveResult",
    "FeasibilityResult",
    "solve",
    "feasibility_phase",
]

_MU = 10.0
_NEWTON_TOL = 1e-10
_MAX_NEWTON = 60


@dataclass(frozen=True)
class QuadConstraint:
    Q: np.ndarray
    q: np.ndarray
    r: float
    name: str = ""


@dataclass(frozen=True)
class RotatedCone:
    """``(a.z + b)^2 <= (c.z + d)(e.z + f)``, both factors nonnegative."""

    a: np.ndarray
    b: float
    c: np.ndarray
    d: float
    e: np.ndarray
    f: float
    name: str = ""


class ConicProgram:
    """Mutable builder; freeze it implicitly by passing it to :func:`solve`."""

    def __init__(self, n_vars: int, objective=None, names=None):
        self.n = int(n_vars)
        self.c = np.zeros(self.n) if objective is None else np.asarray(objective, float).copy()
        if self.c.shape != (self.n,):
            raise ValueError(f"objective has shape {self.c.shape}, expected ({self.n},)")
        self.var_names = list(names) if names is not None else [f"z{i}" for i in range(self.n)]
        self._lin_rows: list[np.ndarray] = []
        self._lin_b: list[float] = []
        self.lin_names: list[str] = []
        self.quads: list[QuadConstraint] = []
        self.cones: list[RotatedCone] = []

    # -- building -------------------------------------------------------------
    def _vec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float).ravel()
        if v.shape != (self.n,):
            raise ValueError(f"coefficient vector has {v.size} entries, expected {self.n}")
        return v

    def add_linear(self, a, b: float, name: str = "") -> None:
        """``a . z <= b``."""
        self._lin_rows.append(self._vec(a))
        self._lin_b.append(float(b))
        self.lin_names.append(name)

    def add_linear_block(self, A, b, name: str = "") -> None:
        A = np.asarray(A, dtype=float).reshape(-1, self.n)
        b = np.asarray(b, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise ValueError("row count mismatch")
        self._lin_rows.extend(A)
        self._lin_b.extend(b.tolist())
        self.lin_names.extend([name] * b.size)

    def add_quadratic(self, Q, q, r: float, name: str = "") -> None:
        """``z^T Q z + q . z + r <= 0``; ``Q`` must be symmetric PSD."""
        Q = np.asarray(Q, dtype=float)
        if Q.shape != (self.n, self.n):
            raise ValueError(f"Q has shape {Q.shape}, expected ({self.n}, {self.n})")
        Q = 0.5 * (Q + Q.T)
        w = np.linalg.eigvalsh(Q)
        if w[0] < -1e-10 * max(1.0, abs(w[-1])):
            raise ValueError(f"Q is not PSD (min eigenvalue {w[0]:.3g})")
        self.quads.append(QuadConstraint(Q, self._vec(q), float(r), name))

    def add_rotated_cone(self, a, b, c, d, e, f, name: str = "") -> None:
        self.cones.append(RotatedCone(self._vec(a), float(b), self._vec(c), float(d),
                                      self._vec(e), float(f), name))

    @property
    def A(self) -> np.ndarray:
        return np.array(self._lin_rows).reshape(-1, self.n)

    @property
    def b(self) -> np.ndarray:
        return np.array(self._lin_b, dtype=float)

    @property
    def n_constraints(self) -> int:
        return len(self._lin_b) + len(self.quads) + len(self.cones)

    # -- evaluation -----------------------------------------------------------
    def constraint_values(self, z) -> np.ndarray:
        """``g_i(z)`` for every constraint (feasible iff all ``<= 0``).

        Cone entries are ``(a.z+b)^2 - (c.z+d)(e.z+f)`` augmented by the sign
        conditions, so they are meaningful everywhere.
        """
        z = np.asarray(z, dtype=float)
        parts = [self.A @ z - self.b]
        parts.append(np.array([z @ k.Q @ z + k.q @ z + k.r for k in self.quads]))
        cone_vals = []
        for k in self.cones:
            w = k.a @ z + k.b
            s = k.c @ z + k.d
            t = k.e @ z + k.f
            cone_vals.append(max(w * w - s * t, -s, -t))
        parts.append(np.array(cone_vals))
        return np.concatenate(parts)

    def max_violation(self, z) -> float:
        g = self.constraint_values(z)
        return float(max(0.0, g.max())) if g.size else 0.0

    def objective_value(self, z) -> float:
        return float(self.c @ np.asarray(z, float))

    def to_dict(self) -> dict:
        return {
            "n_vars": self.n,
            "var_names": self.var_names,
            "objective": self.c.tolist(),
            "linear": {"A": self.A.tolist(), "b": self.b.tolist(), "names": self.lin_names},
            "quadratic": [{"Q": k.Q.tolist(), "q": k.q.tolist(), "r": k.r, "name": k.name}
                          for k in self.quads],
            "rotated_cone": [{"a": k.a.tolist(), "b": k.b, "c": k.c.tolist(), "d": k.d,
                              "e": k.e.tolist(), "f": k.f, "name": k.name} for k in self.cones],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ConicProgram":
        p = cls(d["n_vars"], d["objective"], d.get("var_names"))
        lin = d.get("linear", {})
        if lin.get("b"):
            p.add_linear_block(lin["A"], lin["b"])
            p.lin_names = list(lin.get("names") or [""] * len(lin["b"]))
        for k in d.get("quadratic", []):
            p.add_quadratic(k["Q"], k["q"], k["r"], k.get("name", ""))
        for k in d.get("rotated_cone", []):
            p.add_rotated_cone(k["a"], k["b"], k["c"], k["d"], k["e"], k["f"], k.get("name", ""))
        return p

    def __repr__(self):
        return (f"ConicProgram(n={self.n}, linear={len(self._lin_b)}, "
                f"quadratic={len(self.quads)}, cones={len(self.cones)})")


@dataclass
class SolveResult:
    status: str  # optimal | max-iterations | infeasible-detected | unbounded
    x: np.ndarray | None
    objective: float
    residuals: dict = field(default_factory=dict)
    iterations: int = 0
    barrier_objectives: list = field(default_factory=list)
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


@dataclass
class FeasibilityResult:
    feasible: bool
    x: np.ndarray | None
    min_slack: float
    certificate: float = math.nan  # lower bound on the max violation when infeasible
    iterations: int = 0


class _Barrier:
    """Log barrier over a row-normalised copy of the program's constraints.

    Phase II (``shift=False``) treats each cone through ``g = w^2 - s t`` on the
    domain ``s, t > 0``, i.e. the self-concordant barrier ``-log(s t - w^2)``.
    Phase I (``shift=True``) appends a slack variable ``sigma``, uses the convex
    residual ``||(2w, s - t)|| - (s + t)`` for cones and relaxes every constraint
    to ``g_i <= sigma``.
    """

    def __init__(self, prog: ConicProgram, shift: bool = False):
        A, b = prog.A, prog.b
        norms = np.linalg.norm(A, axis=1)
        live = norms > 1e-14 * max(1.0, norms.max(initial=0.0))
        # rows without variables are constants: either always true or hopeless
        self.trivial_violation = float(max(0.0, np.max(-b[~live]))) if np.any(~live) else 0.0
        self.A = A[live] / norms[live, None]
        self.b = b[live] / norms[live]
        self.quads = prog.quads
        self.cones = prog.cones
        self.shift = shift
        self.nx = prog.n
        self.n = prog.n + (1 if shift else 0)
        self.n_lin = self.A.shape[0]
        self.m_core = self.n_lin + len(self.quads) + len(self.cones)
        self.m = self.m_core

    def core_values(self, x) -> np.ndarray | None:
        """Unshifted constraint functions, ``None`` outside the cone domain (phase II)."""
        out = np.empty(self.m_core)
        k = self.n_lin
        out[:k] = self.A @ x - self.b
        for i, qc in enumerate(self.quads):
            out[k + i] = x @ qc.Q @ x + qc.q @ x + qc.r
        k += len(self.quads)
        for i, cc in enumerate(self.cones):
            w = cc.a @ x + cc.b
            s = cc.c @ x + cc.d
            t = cc.e @ x + cc.f
            if self.shift:
                out[k + i] = math.sqrt(4 * w * w + (s - t) ** 2 + _SMOOTH**2) - (s + t)
            else:
                if s <= 0 or t <= 0:
                    return None
                out[k + i] = w * w - s * t
        return out

    def values(self, z) -> np.ndarray | None:
        if not self.shift:
            return self.core_values(z)
        g = self.core_values(z[:-1])
        return None if g is None else g - z[-1]

    def derivatives(self, z, g):
        """Gradient and Hessian of ``-sum log(-g_i)``, and each nonlinear ``grad g_i``."""
        x = z[:-1] if self.shift else z
        nx, k = self.nx, self.n_lin
        inv = 1.0 / (-g[: self.m_core])
        Ah = np.hstack([self.A, -np.ones((k, 1))]) if self.shift else self.A
        grad = Ah.T @ inv[:k]
        hess = (Ah * (inv[:k] ** 2)[:, None]).T @ Ah
        grads = []
        for i, qc in enumerate(self.quads):
            gi = np.zeros(self.n)
            gi[:nx] = 2 * qc.Q @ x + qc.q
            if self.shift:
                gi[-1] = -1.0
            r = inv[k + i]
            grad += r * gi
            hess += r * r * np.outer(gi, gi)
            hess[:nx, :nx] += 2 * r * qc.Q
            grads.append(gi)
        k += len(self.quads)
        for i, cc in enumerate(self.cones):
            w = cc.a @ x + cc.b
            s = cc.c @ x + cc.d
            t = cc.e @ x + cc.f
            gi = np.zeros(self.n)
            if self.shift:
                ce = cc.c - cc.e
                v = 4 * w * cc.a + (s - t) * ce
                nrm = math.sqrt(4 * w * w + (s - t) ** 2 + _SMOOTH**2)
                gi[:nx] = v / nrm - (cc.c + cc.e)
                gi[-1] = -1.0
                curv = (4 * np.outer(cc.a, cc.a) + np.outer(ce, ce)) / nrm - np.outer(v, v) / nrm**3
            else:
                gi[:] = 2 * w * cc.a - t * cc.c - s * cc.e
                curv = 2 * np.outer(cc.a, cc.a) - np.outer(cc.c, cc.e) - np.outer(cc.e, cc.c)
            r = inv[k + i]
            grad += r * gi
            hess += r * r * np.outer(gi, gi)
            hess[:nx, :nx] += r * curv
            grads.append(gi)
        return grad, hess, grads


_SMOOTH = 1e-10
_STALL_STATIONARITY = 1e-3


class _PhaseOneBarrier(_Barrier):
    """Shifted barrier plus the floor ``sigma >= -1`` and a hard box ``|x - x0| <= radius``
    that keeps the auxiliary problem bounded."""

    def __init__(self, prog: ConicProgram, x0: np.ndarray, radius: float):
        super().__init__(prog, shift=True)
        self.x0 = x0
        self.radius = radius
        self.m = self.m_core + 1 + 2 * prog.n

    def values(self, z):
        g = _Barrier.values(self, z)
        if g is None:
            return None
        d = z[:-1] - self.x0
        return np.concatenate([g, [-1.0 - z[-1]], d - self.radius, -d - self.radius])

    def derivatives(self, z, g):
        mc, nx = self.m_core, self.nx
        grad, hess, grads = _Barrier.derivatives(self, z, g)
        r = 1.0 / (-g[mc])
        grad[-1] -= r
        hess[-1, -1] += r * r
        up = 1.0 / (-g[mc + 1: mc + 1 + nx])
        lo = 1.0 / (-g[mc + 1 + nx:])
        grad[:nx] += up - lo
        idx = np.arange(nx)
        hess[idx, idx] += up**2 + lo**2
        return grad, hess, grads


def _newton_dir(H, rhs):
    try:
        return np.linalg.solve(H, rhs)
    except np.linalg.LinAlgError:
        reg = 1e-12 * max(1.0, np.trace(H) / H.shape[0])
        return np.linalg.lstsq(H + reg * np.eye(H.shape[0]), rhs, rcond=None)[0]


def _center(bar: _Barrier, obj: np.ndarray, t: float, z: np.ndarray, stop=None):
    """Minimise ``t obj.z - sum log(-g)`` from strictly feasible ``z``.

    Returns ``(z, g, newton_steps, converged)``; ``stop(z)`` may end early.
    """
    g = bar.values(z)
    steps = 0
    for _ in range(_MAX_NEWTON):
        grad_b, hess, _ = bar.derivatives(z, g)
        grad = t * obj + grad_b
        dz = _newton_dir(hess, -grad)
        lam2 = float(-grad @ dz)
        if not math.isfinite(lam2):
            return z, g, steps, False
        if lam2 / 2 <= _NEWTON_TOL:
            return z, g, steps, True
        f0 = t * (obj @ z) - np.sum(np.log(-g))
        step = 1.0
        while True:
            zn = z + step * dz
            gn = bar.values(zn)
            if gn is not None and np.all(gn < 0):
                fn = t * (obj @ zn) - np.sum(np.log(-gn))
                if fn <= f0 - 0.25 * step * lam2:
                    break
            step *= 0.5
            if step < 1e-14:
                # no further progress possible at this precision
                return z, g, steps, lam2 / 2 <= 1e-6
        z, g = zn, gn
        steps += 1
        if stop is not None and stop(z):
            return z, g, steps, True
    return z, g, steps, False


def _strictly_feasible(prog: ConicProgram, z) -> bool:
    if z is None:
        return False
    bar = _Barrier(prog)
    if bar.trivial_violation > 0:
        return False
    g = bar.values(np.asarray(z, float))
    return g is not None and bool(np.all(g < 0))


def feasibility_phase(program: ConicProgram, x0=None, tol: float = 1e-9,
                      max_stages: int = 40) -> FeasibilityResult:
    """Find a strictly feasible point by minimising a common slack ``sigma``
    subject to ``g_i <= sigma`` and ``sigma >= -1``.

    Stops once every constraint holds with margin close to 1 or the auxiliary
    problem is solved; reports infeasibility when the auxiliary optimum is
    certified positive.
    """
    n = program.n
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, float).copy()
    radius = 1e6 * (1.0 + float(np.max(np.abs(x0), initial=0.0)))
    bar = _PhaseOneBarrier(program, x0, radius)
    if bar.trivial_violation > 0:
        return FeasibilityResult(False, None, -bar.trivial_violation,
                                 certificate=bar.trivial_violation)
    g0 = bar.core_values(x0)
    sigma0 = max(float(np.max(g0)) if g0.size else 0.0, -0.5) + 1.0
    z = np.append(x0, sigma0)
    obj = np.zeros(n + 1)
    obj[-1] = 1.0
    target = -1.0 + 1e-3

    def early(zz):
        v = bar.core_values(zz[:-1])
        return v.size == 0 or float(np.max(v)) <= target

    t = 1.0
    total = 0
    for _ in range(max_stages):
        z, g, steps, _ = _center(bar, obj, t, z, stop=early)
        total += steps
        sigma = z[-1]
        gap = bar.m / t
        if early(z):
            break
        if sigma - gap > tol:
            # the auxiliary optimum is at least sigma - gap > 0
            return FeasibilityResult(False, None, -sigma, certificate=sigma - gap,
                                     iterations=total)
        if sigma < 0 and gap <= 0.5 * abs(sigma):
            break
        if gap < tol:
            break
        t *= _MU
    x = z[:-1]
    core = _Barrier(program).core_values(x)
    slack = -float(np.max(core)) if core is not None and core.size else 1.0
    if slack <= 0 or not _strictly_feasible(program, x):
        return FeasibilityResult(False, None, slack, certificate=max(0.0, -slack),
                                 iterations=total)
    return FeasibilityResult(True, x, slack, iterations=total)


def _kkt(bar: _Barrier, prog: ConicProgram, obj_min: np.ndarray, z: np.ndarray, t: float) -> dict:
    """KKT residuals at ``z``.

    Two multiplier estimates are tried: the barrier's ``1 / (t (-g))`` and a
    nonnegative least-squares refit on the nearly active constraints. The
    latter removes the centring error that the barrier estimate inherits
    along active directions. The estimate with the smaller worst residual is reported.
    """
    g = bar.values(z)
    k = bar.A.shape[0]
    _, _, grads = bar.derivatives(z, g)
    G = np.vstack([bar.A] + [gi[None, :] for gi in grads]) if grads else bar.A
    scale = max(1.0, float(np.max(np.abs(obj_min))))

    def residuals(lam):
        station = obj_min + G.T @ lam
        return {
            "stationarity": float(np.max(np.abs(station)) / scale),
            "primal_feasibility": prog.max_violation(z),
            "complementarity": float(np.max(lam * np.abs(g))) if g.size else 0.0,
            "duality_gap": bar.m / t,
        }

    barrier = residuals(1.0 / (t * (-g)))
    active = -g <= max(1e-6, 1e3 * bar.m / t)
    if not np.any(active):
        return barrier
    lam = np.zeros(g.size)
    lam[active] = nnls(G[active].T, -obj_min)[0]
    refit = residuals(lam)
    worst = lambda r: max(r["stationarity"], r["complementarity"])
    return refit if worst(refit) < worst(barrier) else barrier


def solve(program: ConicProgram, tol: float = 1e-8, strictly_feasible_start=None,
          max_stages: int = 30) -> SolveResult:
    """Maximise ``program.c . z`` over the program's constraints.

    ``status == "optimal"`` certifies a strictly feasible point whose objective is
    within ``tol * max(1, |objective|)`` of the optimum (barrier duality gap).
    """
    prog = program
    bar = _Barrier(prog)
    if bar.trivial_violation > 0:
        return SolveResult("infeasible-detected", None, math.nan,
                           message="constant constraint violated")
    if bar.m == 0:
        if np.any(prog.c != 0):
            return SolveResult("unbounded", None, math.inf, message="no constraints")
        return SolveResult("optimal", np.zeros(prog.n), 0.0)

    iters = 0
    if _strictly_feasible(prog, strictly_feasible_start):
        z = np.asarray(strictly_feasible_start, float).copy()
    else:
        feas = feasibility_phase(prog, strictly_feasible_start, tol=min(tol, 1e-9))
        iters += feas.iterations
        if not feas.feasible:
            return SolveResult("infeasible-detected", None, math.nan, iterations=iters,
                               message=f"phase I certificate {feas.certificate:.3g}")
        z = feas.x

    obj = -prog.c  # minimise
    t = 1.0
    history = []
    status = "max-iterations"
    for _ in range(max_stages):
        z, g, steps, ok = _center(bar, obj, t, z)
        iters += steps
        val = float(prog.c @ z)
        history.append(val)
        if not math.isfinite(val) or abs(val) > 1e15:
            status = "unbounded"
            break
        if bar.m / t <= tol * max(1.0, abs(val)):
            status = "optimal" if ok else "stalled"
            break
        t *= _MU
    res = _kkt(bar, prog, obj, z, t)
    if status == "stalled":
        # gap certified; centring hit rounding limits at large t
        status = "optimal" if res["stationarity"] <= _STALL_STATIONARITY else "max-iterations"
    if status == "optimal" and res["primal_feasibility"] > tol:
        status = "max-iterations"
    return SolveResult(status, z, float(prog.c @ z), res, iters, history)
