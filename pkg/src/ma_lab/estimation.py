"""Snapshot synthesis, MUSIC in one and two dimensions, Monte Carlo MSE and
steering-vector correlation maps.

With a single target the signal subspace is one vector ``u_s`` and the noise
projector is ``I - u_s u_s^H``, so the MUSIC denominator reduces to
``N - |u_s^H alpha|^2``. Every spectrum and correlation map is therefore a beam
power ``|sum_n w_n exp(j k r_n . eta)|^2`` evaluated on a grid by
:mod:`ma_lab.kernels`.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter
from scipy.optimize import minimize
from scipy.signal import find_peaks

from . import kernels
from .array import (Geometry1D, Geometry2D, SensingScene, SpatialAngles, channel,
                    steering_vector_1d, steering_vector_2d)
from .errors import GeometryError

__all__ = [
    "SnapshotBlock",
    "SubspaceDecomposition",
    "MusicSpectrum",
    "TrialBatch",
    "CorrelationMap",
    "synthesize",
    "decompose",
    "music_1d",
    "music_2d",
    "monte_carlo_mse",
    "correlation",
    "correlation_map",
    "thread_count",
]

GRID_1D = 1e-3
GRID_2D = 4e-3
SIGNAL_MODELS = ("constant-modulus", "gaussian")


def _coords(geometry) -> np.ndarray:
    """Positions as an ``N x d`` array (``d`` = 1 or 2)."""
    if isinstance(geometry, Geometry1D):
        return geometry.positions[:, None]
    return np.column_stack([geometry.xs, geometry.ys])


def _steering(geometry, angles: SpatialAngles, wavelength: float) -> np.ndarray:
    if isinstance(geometry, Geometry1D):
        return steering_vector_1d(geometry, angles.u, wavelength)
    return steering_vector_2d(geometry, angles, wavelength)


def _grid(step: float) -> np.ndarray:
    if not step > 0:
        raise ValueError("grid_step must be positive")
    m = int(round(2.0 / step))
    return np.linspace(-1.0, 1.0, m + 1)


def thread_count(default: int | None = None) -> int:
    """Worker cap from ``MA_LAB_THREADS`` (at least 1)."""
    env = os.environ.get("MA_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, default if default is not None else (os.cpu_count() or 1))


@dataclass(frozen=True)
class SnapshotBlock:
    """``N x T`` received samples with the scene and geometry that produced them."""

    y: np.ndarray
    scene: SensingScene
    geometry: Geometry1D | Geometry2D
    seed: int | None = None
    beta: complex = 1.0

    def __post_init__(self):
        y = np.asarray(self.y, np.complex128)
        if y.ndim == 1:
            y = y[:, None]
        if y.shape[0] != self.geometry.n or y.shape[0] != self.scene.n:
            raise GeometryError(
                f"Y has {y.shape[0]} rows; scene has N = {self.scene.n}, "
                f"geometry has {self.geometry.n} antennas")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def t(self) -> int:
        return self.y.shape[1]


def synthesize(scene: SensingScene, geometry, seed=None,
               signal: str = "constant-modulus") -> SnapshotBlock:
    """Draw ``Y = h s^T + Z`` for ``T = scene.snapshots`` snapshots.

    ``signal="constant-modulus"`` uses ``s_t = sqrt(P) exp(j phi_t)``, which fixes
    ``|s_t|^2 = P`` as the bound assumes; ``"gaussian"`` draws circularly
    symmetric ``s_t`` of power ``P``. Noise is circularly symmetric of power
    ``sigma^2``. ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if signal not in SIGNAL_MODELS:
        raise ValueError(f"signal must be one of {SIGNAL_MODELS}")
    if geometry.n != scene.n:
        raise GeometryError(f"scene has N = {scene.n}, geometry has {geometry.n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    t = scene.snapshots
    beta = scene.beta(rng)
    h = channel(beta, _steering(geometry, scene.angles, scene.wavelength))
    if signal == "constant-modulus":
        s = math.sqrt(scene.power) * np.exp(1j * rng.uniform(0, 2 * math.pi, t))
    else:
        s = math.sqrt(scene.power / 2) * (rng.standard_normal(t) + 1j * rng.standard_normal(t))
    z = math.sqrt(scene.noise_power / 2) * (rng.standard_normal((scene.n, t))
                                            + 1j * rng.standard_normal((scene.n, t)))
    y = np.outer(h, s) + z
    return SnapshotBlock(y, scene, geometry, seed if isinstance(seed, int) else None, beta)


@dataclass(frozen=True)
class SubspaceDecomposition:
    """Dominant (signal) singular vector and the orthonormal noise basis of ``R_Y``."""

    signal: np.ndarray
    noise: np.ndarray
    gamma_s: float
    gamma_z: np.ndarray
    degenerate: bool

    def projection_denominator(self, alpha: np.ndarray) -> float:
        """``alpha^H U_z U_z^H alpha``."""
        c = self.noise.conj().T @ alpha
        return float(np.real(np.vdot(c, c)))


def decompose(block: SnapshotBlock, rel_gap: float = 1e-9) -> SubspaceDecomposition:
    """Eigen-decomposition of ``R_Y = Y Y^H / T`` with the noise dimension fixed at ``N - 1``.

    ``degenerate`` is set when the dominant eigenvalue is not separated from the
    next one, in which case the signal direction is arbitrary.
    """
    y = block.y
    r = y @ y.conj().T / y.shape[1]
    vals, vecs = np.linalg.eigh(r)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    top = float(vals[0])
    nxt = float(vals[1]) if vals.size > 1 else 0.0
    degenerate = top <= 0 or (top - nxt) <= rel_gap * top
    return SubspaceDecomposition(vecs[:, 0].copy(), vecs[:, 1:].copy(), top, vals[1:].copy(),
                                 bool(degenerate))


@dataclass
class MusicSpectrum:
    """Pseudo-spectrum ``1 / (alpha^H U_z U_z^H alpha)`` on a grid.

    ``grid`` is a 1D array for linear arrays and a ``(u_grid, v_grid)`` pair for
    planar arrays (``values[i, j]`` at ``(u_grid[i], v_grid[j])``).
    """

    grid: object
    values: np.ndarray
    peak: tuple
    estimate: tuple
    n: int

    @property
    def dim(self) -> int:
        return self.values.ndim

    def peaks(self, count: int = 5, rel_height: float = 0.0) -> list[tuple]:
        """Local maxima sorted by height, as ``(angle..., value)`` tuples."""
        vals = self.values
        if self.dim == 1:
            idx, _ = find_peaks(np.r_[-np.inf, vals, -np.inf])
            idx = idx - 1
            out = [(float(self.grid[i]), float(vals[i])) for i in idx]
        else:
            ug, vg = self.grid
            mask = _disc_mask(ug, vg)
            v = np.where(mask, vals, -np.inf)
            loc = (v == maximum_filter(v, size=3, mode="constant", cval=-np.inf)) & mask
            ii, jj = np.nonzero(loc)
            out = [(float(ug[i]), float(vg[j]), float(vals[i, j])) for i, j in zip(ii, jj)]
        out.sort(key=lambda p: -p[-1])
        if out and rel_height > 0:
            out = [p for p in out if p[-1] >= rel_height * out[0][-1]]
        return out[:count]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.dim == 1:
            w.writerow(["u", "value"])
            for g, v in zip(self.grid, self.values):
                w.writerow([repr(float(g)), repr(float(v))])
        else:
            ug, vg = self.grid
            w.writerow(["u", "v", "value"])
            for i, gu in enumerate(ug):
                for j, gv in enumerate(vg):
                    w.writerow([repr(float(gu)), repr(float(gv)), repr(float(self.values[i, j]))])
        return _write(buf.getvalue(), path)


def _write(text: str, path) -> str:
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def _disc_mask(ug, vg) -> np.ndarray:
    return (ug[:, None] ** 2 + vg[None, :] ** 2) <= 1.0 + 1e-12


def _spectrum_from_power(power: np.ndarray, n: int) -> np.ndarray:
    # denominator N - |u_s^H alpha|^2, floored so the spectrum stays finite and positive
    denom = np.maximum(n - power, n * 1e-15)
    return 1.0 / denom


def _parabolic(lm, l0, lp) -> float:
    """Vertex offset (in grid steps) of the parabola through three samples."""
    curv = lm - 2 * l0 + lp
    if not (curv < 0 and np.isfinite(curv)):
        return 0.0
    return float(np.clip(0.5 * (lm - lp) / curv, -0.5, 0.5))


def _polish(coords: np.ndarray, w: np.ndarray, k: float, eta0: np.ndarray,
            half_width: float) -> np.ndarray:
    """Maximise ``|sum w_n exp(j k r_n . eta)|^2`` within ``eta0 +- half_width``."""
    n = coords.shape[0]
    scale = 1.0 / n**2

    def fun(eta):
        e = w * np.exp(1j * k * (coords @ eta))
        c = e.sum()
        dc = (1j * k) * (coords.T @ e)
        f = c.real**2 + c.imag**2
        grad = 2 * np.real(np.conj(c) * dc)
        return -f * scale, -grad * scale

    lo = eta0 - half_width
    hi = eta0 + half_width
    bounds = list(zip(np.maximum(lo, -1.0), np.minimum(hi, 1.0)))
    res = minimize(fun, eta0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 100})
    if res.fun <= fun(eta0)[0]:
        return np.asarray(res.x, float)
    return eta0


def music_1d(block: SnapshotBlock, geometry: Geometry1D | None = None,
             grid_step: float = GRID_1D, refine: bool = True,
             decomposition: SubspaceDecomposition | None = None) -> MusicSpectrum:
    """Grid search of the MUSIC pseudo-spectrum over ``u in [-1, 1]``.

    With ``refine`` the grid peak is moved by a parabolic fit on the
    log-spectrum and then polished by a bounded local maximisation of
    ``|u_s^H alpha(u)|^2`` within one grid step.
    """
    geometry = block.geometry if geometry is None else geometry
    if not isinstance(geometry, Geometry1D):
        raise GeometryError("music_1d needs a linear geometry")
    dec = decomposition or decompose(block)
    k = 2 * math.pi / block.scene.wavelength
    grid = _grid(grid_step)
    w = dec.signal.conj()
    power = kernels.beam_power_1d(geometry.positions, w, grid, k)
    values = _spectrum_from_power(power, geometry.n)
    i = int(np.argmax(values))
    peak = (float(grid[i]),)
    est = grid[i]
    if refine:
        if 0 < i < grid.size - 1:
            lv = np.log(values[i - 1: i + 2])
            est = grid[i] + grid_step * _parabolic(*lv)
        est = _polish(geometry.positions[:, None], w, k, np.array([est]), grid_step)[0]
        est = float(np.clip(est, -1.0, 1.0))
    return MusicSpectrum(grid, values, peak, (float(est),), geometry.n)


def music_2d(block: SnapshotBlock, geometry: Geometry2D | None = None,
             grid_step: float = GRID_2D, refine: bool = True,
             decomposition: SubspaceDecomposition | None = None) -> MusicSpectrum:
    """Grid search over ``[-1, 1]^2``; the peak is taken on the disc ``u^2 + v^2 <= 1``."""
    geometry = block.geometry if geometry is None else geometry
    if not isinstance(geometry, Geometry2D):
        raise GeometryError("music_2d needs a planar geometry")
    dec = decomposition or decompose(block)
    k = 2 * math.pi / block.scene.wavelength
    ug = _grid(grid_step)
    vg = ug.copy()
    w = dec.signal.conj()
    power = kernels.beam_power_2d(geometry.xs, geometry.ys, w, ug, vg, k)
    values = _spectrum_from_power(power, geometry.n)
    masked = np.where(_disc_mask(ug, vg), values, -np.inf)
    i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
    peak = (float(ug[i]), float(vg[j]))
    est = np.array(peak)
    if refine:
        if 0 < i < ug.size - 1 and np.isfinite(masked[i - 1, j]) and np.isfinite(masked[i + 1, j]):
            est[0] += grid_step * _parabolic(*np.log(values[i - 1: i + 2, j]))
        if 0 < j < vg.size - 1 and np.isfinite(masked[i, j - 1]) and np.isfinite(masked[i, j + 1]):
            est[1] += grid_step * _parabolic(*np.log(values[i, j - 1: j + 2]))
        est = _polish(np.column_stack([geometry.xs, geometry.ys]), w, k, est, grid_step)
        r = math.hypot(*est)
        if r > 1:
            est = est / r
    return MusicSpectrum((ug, vg), values, peak, (float(est[0]), float(est[1])), geometry.n)


@dataclass
class TrialBatch:
    """Per-trial estimates and the empirical MSE with its standard error."""

    u_hat: np.ndarray
    v_hat: np.ndarray | None
    mse_u: float
    mse_v: float | None
    se_u: float
    se_v: float | None
    trials: int
    scene: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"trials": self.trials, "mse_u": self.mse_u, "mse_v": self.mse_v,
                "se_u": self.se_u, "se_v": self.se_v, "scene": self.scene}


def _scene_descriptor(scene: SensingScene) -> dict:
    return {"n": scene.n, "u": scene.angles.u, "v": scene.angles.v, "snapshots": scene.snapshots,
            "snr_db": scene.snr_db if scene.noise_power > 0 and scene.power > 0 else None,
            "wavelength": scene.wavelength}


def _mse(err: np.ndarray) -> tuple[float, float]:
    sq = err * err
    se = float(np.std(sq, ddof=1) / math.sqrt(sq.size)) if sq.size > 1 else math.nan
    return float(sq.mean()), se


def monte_carlo_mse(scene: SensingScene, geometry, trials: int, seed: int = 0,
                    grid_step: float | None = None, refine: bool = True,
                    signal: str = "constant-modulus", workers: int | None = None) -> TrialBatch:
    """Empirical ``E|u - u_hat|^2`` (and ``v``) over independent trials.

    Trial ``i`` uses the ``i``-th child of ``SeedSequence(seed)``, so results do
    not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    planar = isinstance(geometry, Geometry2D)
    step = grid_step if grid_step is not None else (GRID_2D if planar else GRID_1D)
    music = music_2d if planar else music_1d
    children = np.random.SeedSequence(seed).spawn(trials)

    def one(ss):
        block = synthesize(scene, geometry, np.random.default_rng(ss), signal=signal)
        return music(block, geometry, step, refine).estimate

    nw = min(trials, workers if workers is not None else thread_count())
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            est = list(ex.map(one, children))
    else:
        est = [one(ss) for ss in children]
    est = np.asarray(est, float)
    u_hat = est[:, 0]
    mse_u, se_u = _mse(scene.angles.u - u_hat)
    v_hat = mse_v = se_v = None
    if planar:
        v_hat = est[:, 1]
        mse_v, se_v = _mse(scene.angles.v - v_hat)
    return TrialBatch(u_hat, v_hat, mse_u, mse_v, se_u, se_v, trials, _scene_descriptor(scene))


def correlation(geometry, true_angles, candidate, wavelength: float = 1.0) -> float:
    """``q = |alpha(true)^H alpha(candidate)|^2 / N^2`` at a single candidate."""
    true_angles = _as_angles(true_angles)
    cand = _as_angles(candidate)
    a = _steering(geometry, true_angles, wavelength)
    b = _steering(geometry, cand, wavelength)
    return float(abs(np.vdot(a, b)) ** 2 / geometry.n**2)


def _as_angles(a) -> SpatialAngles:
    if isinstance(a, SpatialAngles):
        return a
    if np.ndim(a) == 0:
        return SpatialAngles(float(a))
    return SpatialAngles(*map(float, a))


@dataclass
class CorrelationMap:
    """Values of ``q(eta_bar | eta)`` on a grid (same layout as :class:`MusicSpectrum`)."""

    grid: object
    values: np.ndarray
    true_angles: SpatialAngles

    @property
    def dim(self) -> int:
        return self.values.ndim

    def peaks(self, min_value: float = 0.0, exclude_radius: float = 0.0) -> list[tuple]:
        """Local maxima with ``q >= min_value`` farther than ``exclude_radius`` from the truth."""
        t = np.array(self.true_angles.eta[: self.dim])
        if self.dim == 1:
            v = self.values
            idx, _ = find_peaks(np.r_[-np.inf, v, -np.inf])
            pts = [(float(self.grid[i - 1]), float(v[i - 1])) for i in idx]
        else:
            ug, vg = self.grid
            mask = _disc_mask(ug, vg)
            v = np.where(mask, self.values, -np.inf)
            loc = (v == maximum_filter(v, size=3, mode="constant", cval=-np.inf)) & mask
            ii, jj = np.nonzero(loc)
            pts = [(float(ug[i]), float(vg[j]), float(self.values[i, j])) for i, j in zip(ii, jj)]
        out = [p for p in pts
               if p[-1] >= min_value and np.linalg.norm(np.array(p[:-1]) - t) > exclude_radius]
        out.sort(key=lambda p: -p[-1])
        return out

    def max_sidelobe(self, exclude_radius: float) -> float:
        """Largest ``q`` farther than ``exclude_radius`` from the true angle."""
        t = self.true_angles.eta
        if self.dim == 1:
            far = np.abs(self.grid - t[0]) > exclude_radius
            return float(self.values[far].max(initial=0.0))
        ug, vg = self.grid
        d2 = (ug[:, None] - t[0]) ** 2 + (vg[None, :] - t[1]) ** 2
        far = (d2 > exclude_radius**2) & _disc_mask(ug, vg)
        return float(self.values[far].max(initial=0.0))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.dim == 1:
            w.writerow(["u", "q"])
            for g, v in zip(self.grid, self.values):
                w.writerow([repr(float(g)), repr(float(v))])
        else:
            ug, vg = self.grid
            w.writerow(["u", "v", "q"])
            for i, gu in enumerate(ug):
                for j, gv in enumerate(vg):
                    w.writerow([repr(float(gu)), repr(float(gv)), repr(float(self.values[i, j]))])
        return _write(buf.getvalue(), path)


def correlation_map(geometry, true_angles, grid_step: float | None = None,
                    wavelength: float = 1.0) -> CorrelationMap:
    """``q(eta_bar | eta)`` over ``[-1, 1]`` (linear) or ``[-1, 1]^2`` (planar)."""
    true_angles = _as_angles(true_angles)
    planar = isinstance(geometry, Geometry2D)
    step = grid_step if grid_step is not None else (GRID_2D if planar else GRID_1D)
    k = 2 * math.pi / wavelength
    w = _steering(geometry, true_angles, wavelength).conj() / geometry.n
    g = _grid(step)
    if planar:
        vals = kernels.beam_power_2d(geometry.xs, geometry.ys, w, g, g.copy(), k)
        grid = (g, g.copy())
    else:
        vals = kernels.beam_power_1d(geometry.positions, w, g, k)
        grid = g
    return CorrelationMap(grid, np.clip(vals, 0.0, 1.0), true_angles)
