"""Geometry and scene types, steering vectors and position statistics.

All coordinates are expressed in wavelengths. Functions that take a
``wavelength`` argument only need it when coordinates are given in some
other unit; the default of 1 matches the internal convention.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import GeometryError, InfeasibleError

__all__ = [
    "Geometry1D",
    "Geometry2D",
    "Region",
    "SpatialAngles",
    "SensingScene",
    "PositionStats",
    "steering_vector_1d",
    "steering_vector_2d",
    "channel",
    "position_stats",
    "centering_matrix",
    "geometry_to_json",
    "geometry_from_json",
]


@dataclass(frozen=True, eq=False)
class Geometry1D:
    """Antenna positions on a line, sorted ascending.

    Parameters
    ----------
    positions : sequence of float
        Coordinates in wavelengths. They are sorted on construction.
    """

    positions: np.ndarray

    def __post_init__(self):
        pos = np.sort(np.asarray(self.positions, dtype=float).ravel())
        if pos.size < 2:
            raise GeometryError(f"need at least 2 antennas, got {pos.size}")
        if not np.all(np.isfinite(pos)):
            raise GeometryError("positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return int(self.positions.size)

    def min_gap(self) -> float:
        return float(np.min(np.diff(self.positions)))

    def check(self, length: float | None = None, spacing: float | None = None,
              atol: float = 1e-9) -> None:
        """Raise ``InfeasibleError`` unless the geometry fits the segment ``[0, length]``
        with neighbours at least ``spacing`` apart."""
        x = self.positions
        if length is not None:
            if x[0] < -atol:
                raise InfeasibleError(f"x_1 = {x[0]:.6g} < 0")
            if x[-1] > length + atol:
                raise InfeasibleError(f"x_N = {x[-1]:.6g} > A = {length:.6g}")
        if spacing is not None:
            gaps = np.diff(x)
            k = int(np.argmin(gaps))
            if gaps[k] < spacing - atol:
                raise InfeasibleError(
                    f"x_{k + 2} - x_{k + 1} = {gaps[k]:.6g} < D = {spacing:.6g}")

    def is_feasible(self, length: float | None = None, spacing: float | None = None,
                    atol: float = 1e-9) -> bool:
        try:
            self.check(length, spacing, atol)
        except InfeasibleError:
            return False
        return True

    def shifted(self, offset: float) -> "Geometry1D":
        return Geometry1D(self.positions + offset)

    def __eq__(self, other):
        return isinstance(other, Geometry1D) and np.array_equal(self.positions, other.positions)

    def __hash__(self):
        return hash(self.positions.tobytes())

    def __repr__(self):
        return f"Geometry1D({np.array2string(self.positions, precision=4)})"


@dataclass(frozen=True, eq=False)
class Geometry2D:
    """Antenna positions in the plane, kept in the given order."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float).ravel()
        ys = np.array(self.ys, dtype=float).ravel()
        if xs.shape != ys.shape:
            raise GeometryError(f"xs has {xs.size} entries but ys has {ys.size}")
        if xs.size < 2:
            raise GeometryError(f"need at least 2 antennas, got {xs.size}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise GeometryError("coordinates must be finite")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def from_points(cls, points) -> "Geometry2D":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(pts[:, 0], pts[:, 1])

    @property
    def n(self) -> int:
        return int(self.xs.size)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.xs, self.ys])

    def pairwise_distances(self) -> np.ndarray:
        p = self.points
        diff = p[:, None, :] - p[None, :, :]
        return np.sqrt(np.sum(diff**2, axis=-1))

    def min_distance(self) -> float:
        d = self.pairwise_distances()
        iu = np.triu_indices(self.n, 1)
        return float(np.min(d[iu]))

    def swapped(self) -> "Geometry2D":
        """Exchange the roles of the x and y axes."""
        return Geometry2D(self.ys, self.xs)

    def rotated(self, angle: float) -> "Geometry2D":
        c, s = math.cos(angle), math.sin(angle)
        return Geometry2D(c * self.xs - s * self.ys, s * self.xs + c * self.ys)

    def translated(self, dx: float, dy: float) -> "Geometry2D":
        return Geometry2D(self.xs + dx, self.ys + dy)

    def check(self, region: "Region | None" = None, spacing: float | None = None,
              atol: float = 1e-9) -> None:
        if region is not None:
            viol = region.violation(self.points)
            if viol > atol:
                raise InfeasibleError(f"antenna outside the region by {viol:.3g}")
        if spacing is not None:
            dmin = self.min_distance()
            if dmin < spacing - atol:
                raise InfeasibleError(f"minimum pair distance {dmin:.6g} < D = {spacing:.6g}")

    def is_feasible(self, region=None, spacing=None, atol: float = 1e-9) -> bool:
        try:
            self.check(region, spacing, atol)
        except InfeasibleError:
            return False
        return True

    def __eq__(self, other):
        return (isinstance(other, Geometry2D) and np.array_equal(self.xs, other.xs)
                and np.array_equal(self.ys, other.ys))

    def __hash__(self):
        return hash((self.xs.tobytes(), self.ys.tobytes()))

    def __repr__(self):
        return f"Geometry2D(n={self.n})"


Geometry = Union[Geometry1D, Geometry2D]


@dataclass(frozen=True, eq=False)
class Region:
    """Convex movement region: a circle, an axis-aligned square or a polygon.

    Use the ``circle``, ``square`` and ``polygon`` constructors. Squares keep
    their lower-left corner explicitly so that origin-cornered and centred
    squares are distinguishable.
    """

    kind: str
    center: tuple = (0.0, 0.0)
    radius: float = 0.0
    origin: tuple = (0.0, 0.0)
    side: float = 0.0
    vertices: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        if self.kind == "circle":
            if not self.radius > 0:
                raise GeometryError("circle radius must be positive")
        elif self.kind == "square":
            if not self.side > 0:
                raise GeometryError("square side must be positive")
        elif self.kind == "polygon":
            v = np.array(self.vertices, dtype=float).reshape(-1, 2)
            if v.shape[0] < 3:
                raise GeometryError("polygon needs at least 3 vertices")
            # drop a repeated closing vertex
            if np.allclose(v[0], v[-1]):
                v = v[:-1]
            area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
            scale = max(np.ptp(v[:, 0]), np.ptp(v[:, 1]), 1e-300)
            if abs(area2) <= 1e-12 * scale**2:
                raise GeometryError("degenerate polygon (zero area)")
            if area2 < 0:
                raise GeometryError("polygon vertices must be in counterclockwise order")
            edges = np.roll(v, -1, axis=0) - v
            nxt = np.roll(edges, -1, axis=0)
            cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
            if np.any(cross < -1e-12 * scale**2):
                raise GeometryError("polygon is not convex")
            v.setflags(write=False)
            object.__setattr__(self, "vertices", v)
        else:
            raise GeometryError(f"unknown region kind {self.kind!r}")

    @classmethod
    def circle(cls, radius: float, center=(0.0, 0.0)) -> "Region":
        return cls("circle", center=(float(center[0]), float(center[1])), radius=float(radius))

    @classmethod
    def square(cls, side: float, origin=(0.0, 0.0), centered: bool = False) -> "Region":
        if centered:
            origin = (-side / 2.0, -side / 2.0)
        return cls("square", origin=(float(origin[0]), float(origin[1])), side=float(side))

    @classmethod
    def polygon(cls, vertices) -> "Region":
        return cls("polygon", vertices=np.asarray(vertices, dtype=float))

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows ``a`` and offsets ``b`` with ``a @ r <= b`` describing the region.

        Circles have no finite description and raise ``GeometryError``.
        """
        if self.kind == "square":
            x0, y0 = self.origin
            a = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
            b = np.array([-x0, x0 + self.side, -y0, y0 + self.side])
            return a, b
        if self.kind == "polygon":
            v = self.vertices
            e = np.roll(v, -1, axis=0) - v
            normals = np.column_stack([e[:, 1], -e[:, 0]])
            norms = np.linalg.norm(normals, axis=1)
            keep = norms > 0
            normals = normals[keep] / norms[keep, None]
            b = np.sum(normals * v[keep], axis=1)
            return normals, b
        raise GeometryError("a circle has no half-space description")

    def violation(self, points) -> float:
        """Largest distance-like constraint violation over ``points`` (0 when inside)."""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        if self.kind == "circle":
            r = np.hypot(p[:, 0] - self.center[0], p[:, 1] - self.center[1])
            return float(max(0.0, np.max(r - self.radius)))
        a, b = self.halfspaces()
        return float(max(0.0, np.max(p @ a.T - b)))

    def contains(self, points, atol: float = 1e-9) -> bool:
        return self.violation(points) <= atol

    @property
    def centroid(self) -> tuple[float, float]:
        if self.kind == "circle":
            return self.center
        if self.kind == "square":
            return (self.origin[0] + self.side / 2, self.origin[1] + self.side / 2)
        v = self.vertices
        return (float(v[:, 0].mean()), float(v[:, 1].mean()))

    def bounding_box(self) -> tuple[float, float, float, float]:
        """``(xmin, ymin, xmax, ymax)``."""
        if self.kind == "circle":
            cx, cy = self.center
            return (cx - self.radius, cy - self.radius, cx + self.radius, cy + self.radius)
        if self.kind == "square":
            x0, y0 = self.origin
            return (x0, y0, x0 + self.side, y0 + self.side)
        v = self.vertices
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    def transposed(self) -> "Region":
        """Mirror image under the swap ``(x, y) -> (y, x)``."""
        if self.kind == "circle":
            return Region.circle(self.radius, (self.center[1], self.center[0]))
        if self.kind == "square":
            return Region.square(self.side, (self.origin[1], self.origin[0]))
        return Region.polygon(self.vertices[::-1, ::-1])

    def to_dict(self) -> dict:
        if self.kind == "circle":
            return {"kind": "circle", "center": list(self.center), "radius": self.radius}
        if self.kind == "square":
            return {"kind": "square", "origin": list(self.origin), "side": self.side}
        return {"kind": "polygon", "vertices": self.vertices.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Region":
        kind = d["kind"]
        if kind == "circle":
            return cls.circle(d["radius"], d.get("center", (0.0, 0.0)))
        if kind == "square":
            return cls.square(d["side"], d.get("origin", (0.0, 0.0)), d.get("centered", False))
        if kind == "polygon":
            return cls.polygon(d["vertices"])
        raise GeometryError(f"unknown region kind {kind!r}")


@dataclass(frozen=True)
class SpatialAngles:
    """Direction cosines of the target.

    ``u`` alone describes a 1D scene (``u = cos(vartheta)``). For 2D scenes
    ``u = sin(theta) cos(phi)`` and ``v = cos(theta)``.
    """

    u: float
    v: float = 0.0

    def __post_init__(self):
        if abs(self.u) > 1 or abs(self.v) > 1:
            raise GeometryError("direction cosines must lie in [-1, 1]")

    @classmethod
    def from_steering_angle(cls, vartheta: float) -> "SpatialAngles":
        return cls(math.cos(vartheta))

    @classmethod
    def from_elevation_azimuth(cls, theta: float, phi: float) -> "SpatialAngles":
        return cls(math.sin(theta) * math.cos(phi), math.cos(theta))

    @property
    def w(self) -> float:
        """Out-of-plane component; unused by planar arrays."""
        return math.sqrt(max(0.0, 1.0 - self.u**2 - self.v**2))

    @property
    def eta(self) -> tuple[float, float]:
        return (self.u, self.v)


@dataclass(frozen=True)
class SensingScene:
    """Physical parameters of one sensing setup.

    ``beta_phase=None`` means the path-coefficient phase is drawn uniformly at
    random for every trial.
    """

    n: int
    angles: SpatialAngles
    snapshots: int = 1
    wavelength: float = 1.0
    power: float = 1.0
    noise_power: float = 1.0
    beta_abs: float = 1.0
    beta_phase: float | None = None
    min_spacing: float = 0.5

    def __post_init__(self):
        if self.n < 2:
            raise GeometryError("a scene needs N >= 2 antennas")
        if self.snapshots < 1:
            raise GeometryError("T must be at least 1")
        if not (self.min_spacing > 0 and self.wavelength > 0):
            raise GeometryError("D and the wavelength must be positive")
        # P = 0 (pure noise) and sigma^2 = 0 (noiseless) are valid simulation limits
        if self.power < 0 or self.noise_power < 0 or self.beta_abs < 0:
            raise GeometryError("P, sigma^2 and |beta| must be non-negative")

    @classmethod
    def from_snr_db(cls, n: int, angles: SpatialAngles, snr_db: float, **kw) -> "SensingScene":
        """Scene whose average received SNR ``P |beta|^2 / sigma^2`` equals ``snr_db``."""
        power = kw.pop("power", 1.0)
        beta_abs = kw.pop("beta_abs", 1.0)
        noise = power * beta_abs**2 / 10 ** (snr_db / 10)
        return cls(n=n, angles=angles, power=power, beta_abs=beta_abs, noise_power=noise, **kw)

    @property
    def snr(self) -> float:
        sig = self.power * self.beta_abs**2
        if self.noise_power == 0:
            return math.inf if sig > 0 else math.nan
        return sig / self.noise_power

    @property
    def snr_db(self) -> float:
        return 10 * math.log10(self.snr)

    @property
    def prefactor(self) -> float:
        """sigma^2 lambda^2 / (8 pi^2 T P N |beta|^2)."""
        sig = self.power * self.beta_abs**2
        if sig == 0:
            return math.inf
        return (self.noise_power * self.wavelength**2
                / (8 * math.pi**2 * self.snapshots * self.n * sig))

    def beta(self, rng: np.random.Generator | None = None) -> complex:
        phase = self.beta_phase
        if phase is None:
            rng = rng if rng is not None else np.random.default_rng()
            phase = rng.uniform(0.0, 2 * math.pi)
        return self.beta_abs * complex(math.cos(phase), math.sin(phase))

    def with_n(self, n: int) -> "SensingScene":
        return _replace(self, n=n)

    def with_snr_db(self, snr_db: float) -> "SensingScene":
        return _replace(self, noise_power=self.power * self.beta_abs**2 / 10 ** (snr_db / 10))


def _replace(obj, **changes):
    from dataclasses import replace
    return replace(obj, **changes)


@dataclass(frozen=True)
class PositionStats:
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    cov_xy: float


def steering_vector_1d(geometry: Geometry1D | Sequence[float], u: float,
                       wavelength: float = 1.0) -> np.ndarray:
    """Entries ``exp(j 2 pi x_n u / lambda)``."""
    if abs(u) > 1:
        raise GeometryError(f"|u| = {abs(u):.6g} exceeds 1")
    x = geometry.positions if isinstance(geometry, Geometry1D) else np.asarray(geometry, float)
    return np.exp(1j * (2 * np.pi / wavelength) * x * u)


def steering_vector_2d(geometry: Geometry2D, angles, wavelength: float = 1.0) -> np.ndarray:
    """Entries ``exp(j 2 pi (x_n u + y_n v) / lambda)``."""
    u, v = angles.eta if isinstance(angles, SpatialAngles) else angles
    if u * u + v * v > 1 + 1e-12:
        raise GeometryError(f"u^2 + v^2 = {u * u + v * v:.6g} exceeds 1")
    return np.exp(1j * (2 * np.pi / wavelength) * (geometry.xs * u + geometry.ys * v))


def channel(beta: complex, steering: np.ndarray) -> np.ndarray:
    """Line-of-sight channel ``beta * alpha``."""
    return beta * np.asarray(steering)


def position_stats(geometry: Geometry) -> PositionStats:
    """Mean, variance and covariance of the antenna coordinates (1/N normalisation)."""
    if isinstance(geometry, Geometry1D):
        x = geometry.positions
        y = np.zeros_like(x)
    else:
        x, y = geometry.xs, geometry.ys
    if x.size < 2:
        raise GeometryError("position statistics need N >= 2")
    # centre first: the raw-moment formula loses digits for offset arrays
    mx, my = float(x.mean()), float(y.mean())
    dx, dy = x - mx, y - my
    return PositionStats(mean_x=mx, mean_y=my, var_x=float(np.mean(dx * dx)),
                         var_y=float(np.mean(dy * dy)), cov_xy=float(np.mean(dx * dy)))


def centering_matrix(n: int) -> np.ndarray:
    """``B = I/N - 11^T/N^2`` so that ``var(x) = x^T B x``."""
    return np.eye(n) / n - np.full((n, n), 1.0 / n**2)


def geometry_to_json(geometry: Geometry) -> str:
    if isinstance(geometry, Geometry1D):
        return json.dumps({"xs": geometry.positions.tolist()})
    return json.dumps({"xs": geometry.xs.tolist(), "ys": geometry.ys.tolist()})


def geometry_from_json(text: str) -> Geometry:
    d = json.loads(text) if isinstance(text, str) else text
    if "ys" in d and d["ys"] is not None:
        return Geometry2D(d["xs"], d["ys"])
    return Geometry1D(d["xs"])
