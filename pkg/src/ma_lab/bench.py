"""Scenario configuration, sweeps and byte-stable result emission."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .array import Geometry1D, Geometry2D, Region, SensingScene, SpatialAngles
from .baselines import generate_baseline
from .crb import crb_1d, crb_2d
from .estimation import monte_carlo_mse, thread_count
from .geometry1d import Segment1D, optimal_apv_1d
from .geometry2d import ScaConfig, circular_optimal, optimize_2d

__all__ = ["ScenarioConfig", "ResultRow", "load_config", "build_geometry", "run_scenario",
           "emit", "CSV_HEADER", "SCHEMES"]

CSV_HEADER = ["sweep", "scheme", "crb_u", "crb_v", "mse_u", "mse_v", "se_u", "se_v", "status"]
SCHEMES_1D = ("optimal-1d", "ulah", "ulaf", "explicit")
SCHEMES_2D = ("sca-2d", "circular-optimal", "upah", "upaf", "explicit")
SCHEMES = SCHEMES_1D + SCHEMES_2D
SWEEP_AXES = ("snr_db", "n", "size")


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment: a scene, an aperture, a list of schemes and a sweep axis.

    ``size`` is the segment length (1D), the square side or the circle radius (2D).
    """

    name: str = "scenario"
    kind: str = "sweep"
    dimension: int = 1
    schemes: tuple = ("optimal-1d",)
    n: int = 16
    u: float = 0.71
    v: float = 0.0
    snr_db: float = 20.0
    snapshots: int = 1
    min_spacing: float = 0.5
    wavelength: float = 1.0
    region: str = "segment"
    size: float = 10.0
    sweep_axis: str | None = None
    sweep_values: tuple = ()
    trials: int = 200
    seed: int = 0
    grid_step: float | None = None
    sca: ScaConfig = field(default_factory=ScaConfig)
    rho: tuple | None = None
    explicit_xs: tuple | None = None
    explicit_ys: tuple | None = None
    output: str | None = None

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        allowed = SCHEMES_1D if self.dimension == 1 else SCHEMES_2D
        bad = [s for s in self.schemes if s not in allowed]
        if bad:
            raise ValueError(f"schemes {bad} do not apply to dimension {self.dimension}")
        if self.dimension == 1 and self.region != "segment":
            raise ValueError("1D scenarios use region = 'segment'")
        if self.dimension == 2 and self.region not in ("square", "circle"):
            raise ValueError("2D scenarios use region = 'square' or 'circle'")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")
            vals = [float(v) for v in self.sweep_values]
            if not vals:
                raise ValueError("sweep values are empty")
            if not all(math.isfinite(v) for v in vals):
                raise ValueError("sweep values must be finite")
            if self.sweep_axis != "snr_db" and not all(v > 0 for v in vals):
                raise ValueError(f"{self.sweep_axis} sweep values must be positive")
        if self.trials < 0:
            raise ValueError("trials must be non-negative")
        if not self.size > 0:
            raise ValueError("size must be positive")

    @property
    def points(self) -> list:
        if self.sweep_axis is None:
            return [None]
        return list(self.sweep_values)

    def at(self, value) -> "ScenarioConfig":
        """The scenario with the sweep axis set to ``value``."""
        if self.sweep_axis is None or value is None:
            return self
        if self.sweep_axis == "n":
            return replace(self, n=int(value), sweep_axis=None, sweep_values=())
        return replace(self, **{self.sweep_axis: float(value)}, sweep_axis=None, sweep_values=())

    def scene(self) -> SensingScene:
        return SensingScene.from_snr_db(self.n, SpatialAngles(self.u, self.v), self.snr_db,
                                        snapshots=self.snapshots, wavelength=self.wavelength,
                                        min_spacing=self.min_spacing)

    def region_obj(self) -> Region | None:
        if self.region == "square":
            return Region.square(self.size)
        if self.region == "circle":
            return Region.circle(self.size)
        return None


_SCENE_KEYS = ("n", "u", "v", "snr_db", "snapshots", "min_spacing", "wavelength")


def config_from_dict(d: dict) -> ScenarioConfig:
    s = d.get("scenario", {})
    scene = d.get("scene", {})
    ap = d.get("aperture", {})
    sw = d.get("sweep", {})
    ex = d.get("explicit", {})
    kw = {k: s[k] for k in ("name", "kind", "dimension", "trials", "seed", "grid_step", "output")
          if k in s}
    if "schemes" in s:
        kw["schemes"] = tuple(s["schemes"])
    kw.update({k: scene[k] for k in _SCENE_KEYS if k in scene})
    if "region" in ap:
        kw["region"] = ap["region"]
    if "size" in ap:
        kw["size"] = float(ap["size"])
    if "rho" in ap:
        kw["rho"] = tuple(ap["rho"])
    if sw:
        kw["sweep_axis"] = sw.get("axis")
        kw["sweep_values"] = tuple(sw.get("values", ()))
    if "sca" in d:
        kw["sca"] = ScaConfig(**d["sca"])
    if ex:
        kw["explicit_xs"] = tuple(ex["xs"])
        kw["explicit_ys"] = tuple(ex["ys"]) if "ys" in ex else None
    return ScenarioConfig(**kw)


def load_config(path) -> ScenarioConfig:
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh))


@dataclass
class ResultRow:
    sweep: float | None
    scheme: str
    crb_u: float | None = None
    crb_v: float | None = None
    mse_u: float | None = None
    mse_v: float | None = None
    se_u: float | None = None
    se_v: float | None = None
    status: str = "ok"
    wall_time: float = 0.0

    def as_record(self) -> dict:
        """Emitted fields only (wall time would break byte stability)."""
        return {k: getattr(self, k) for k in CSV_HEADER}


def build_geometry(cfg: ScenarioConfig, scheme: str):
    """Geometry for ``scheme`` and the trace status (``"ok"`` unless SCA failed)."""
    if scheme == "explicit":
        if cfg.explicit_xs is None:
            raise ValueError("explicit scheme needs [explicit] xs (and ys)")
        if cfg.dimension == 1:
            return Geometry1D(cfg.explicit_xs), "ok"
        return Geometry2D(cfg.explicit_xs, cfg.explicit_ys), "ok"
    if scheme == "optimal-1d":
        return optimal_apv_1d(Segment1D(cfg.size, cfg.min_spacing, cfg.n)), "ok"
    if scheme in ("ulah", "ulaf"):
        return generate_baseline(scheme, cfg.n, length=cfg.size), "ok"
    region = cfg.region_obj()
    if scheme in ("upah", "upaf"):
        return generate_baseline(scheme, cfg.n, region=region), "ok"
    if scheme == "circular-optimal":
        if cfg.region != "circle":
            raise ValueError("circular-optimal needs a circular region")
        return circular_optimal(cfg.n, cfg.size, cfg.min_spacing, rho=cfg.rho), "ok"
    if scheme == "sca-2d":
        geom, trace = optimize_2d(cfg.scene(), region, cfg.sca)
        status = "ok" if trace.status in ("converged", "max-iterations") else trace.status
        return geom, status
    raise ValueError(f"unknown scheme {scheme!r}")


def _geometry_key(cfg: ScenarioConfig, scheme: str):
    # SNR does not move antennas, so SNR sweeps share one geometry per scheme
    return (scheme, cfg.n, cfg.size, cfg.min_spacing)


def _row_seed(master: int, point: int, scheme: int) -> int:
    return int(np.random.SeedSequence([master, point, scheme]).generate_state(1)[0])


def _evaluate(cfg: ScenarioConfig, point_idx: int, value, scheme_idx: int, scheme: str,
              geom_entry) -> ResultRow:
    t0 = time.perf_counter()
    row = ResultRow(value, scheme)
    try:
        geom, status = geom_entry
        if isinstance(geom, Exception):
            raise geom
        scene = cfg.scene()
        if isinstance(geom, Geometry1D):
            row.crb_u = crb_1d(scene, geom).crb_u
        else:
            rep = crb_2d(scene, geom)
            row.crb_u, row.crb_v = rep.crb_u, rep.crb_v
        if cfg.trials > 0:
            tb = monte_carlo_mse(scene, geom, cfg.trials, _row_seed(cfg.seed, point_idx, scheme_idx),
                                 grid_step=cfg.grid_step, workers=1)
            row.mse_u, row.se_u = tb.mse_u, tb.se_u
            row.mse_v, row.se_v = tb.mse_v, tb.se_v
        row.status = status
    except Exception as exc:  # recorded per row; the run continues
        row.status = f"error: {type(exc).__name__}: {exc}"
    row.wall_time = time.perf_counter() - t0
    return row


def run_scenario(cfg: ScenarioConfig, workers: int | None = None) -> list[ResultRow]:
    """One row per (sweep value, scheme), in sweep-major order regardless of completion order."""
    nw = workers if workers is not None else thread_count()
    points = [(i, v, cfg.at(v)) for i, v in enumerate(cfg.points)]

    keys = {}
    for _, _, c in points:
        for s in cfg.schemes:
            keys.setdefault(_geometry_key(c, s), (c, s))

    def make(item):
        c, s = item
        try:
            return build_geometry(c, s)
        except Exception as exc:
            return exc, "error"

    items = list(keys.items())
    with ThreadPoolExecutor(max_workers=max(1, nw)) as ex:
        built = dict(zip([k for k, _ in items], ex.map(make, [it for _, it in items])))

    jobs = [(i, v, c, j, s) for i, v, c in points for j, s in enumerate(cfg.schemes)]

    def run(job):
        i, v, c, j, s = job
        return _evaluate(c, i, v, j, s, built[_geometry_key(c, s)])

    with ThreadPoolExecutor(max_workers=max(1, nw)) as ex:
        return list(ex.map(run, jobs))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit(rows, fmt: str = "csv", path=None) -> str:
    """Serialise rows as CSV (fixed header) or JSON; writes ``path`` when given."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to emit")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([_fmt(r.as_record()[k]) for k in CSV_HEADER])
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps([r.as_record() for r in rows], indent=2, allow_nan=True) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
    return text


def any_failed(rows) -> bool:
    return any(r.status != "ok" for r in rows)
