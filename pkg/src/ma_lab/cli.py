"""``ma-lab`` command-line front end."""
from __future__ import annotations

import json
import logging
import sys
from dataclasses import replace

import click

from .array import Geometry1D, Geometry2D, Region, SensingScene, SpatialAngles, geometry_from_json
from .baselines import generate_baseline
from .bench import any_failed, build_geometry, emit, load_config, run_scenario
from .crb import crb_1d, crb_2d, minmax_delta, region_bounds
from .errors import MALabError
from .estimation import correlation_map, monte_carlo_mse, music_1d, music_2d, synthesize
from .geometry1d import Segment1D, optimal_apv_1d, p_closed_form
from .geometry2d import ScaConfig, optimize_2d


def _write(ctx, text: str, path=None) -> None:
    path = path or ctx.obj["out"]
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _geometry_payload(geom, fmt: str, extra: dict | None = None) -> str:
    if fmt == "json":
        d = {"xs": (geom.positions if isinstance(geom, Geometry1D) else geom.xs).tolist()}
        if isinstance(geom, Geometry2D):
            d["ys"] = geom.ys.tolist()
        d.update(extra or {})
        return json.dumps(d, indent=2) + "\n"
    if isinstance(geom, Geometry1D):
        return "x\n" + "".join(f"{x!r}\n" for x in geom.positions.tolist())
    return "x,y\n" + "".join(f"{x!r},{y!r}\n" for x, y in zip(geom.xs.tolist(), geom.ys.tolist()))


def _seed(ctx) -> int:
    return ctx.obj["seed"] if ctx.obj["seed"] is not None else 0


def _load_geometry(path):
    with open(path) as fh:
        return geometry_from_json(fh.read())


def _region(kind: str, size: float) -> Region:
    return Region.square(size) if kind == "square" else Region.circle(size)


def _resolve_geometry(geometry, scheme, n, size, region, spacing, snr_db, u, v):
    if geometry:
        return _load_geometry(geometry)
    if scheme in ("ulah", "ulaf"):
        return generate_baseline(scheme, n, length=size)
    if scheme == "optimal-1d":
        return optimal_apv_1d(Segment1D(size, spacing, n))
    if scheme in ("upah", "upaf"):
        return generate_baseline(scheme, n, region=_region(region, size))
    if scheme == "sca-2d":
        scene = SensingScene.from_snr_db(n, SpatialAngles(u, v), snr_db, min_spacing=spacing)
        return optimize_2d(scene, _region(region, size))[0]
    raise click.BadParameter("give --geometry FILE or a --scheme")


_geometry_opts = [
    click.option("--geometry", type=click.Path(exists=True, dir_okay=False),
                 help="Geometry JSON with xs (and ys)."),
    click.option("--scheme", type=click.Choice(["optimal-1d", "ulah", "ulaf", "upah", "upaf",
                                                "sca-2d"])),
    click.option("--n", "n", type=int, default=16, show_default=True),
    click.option("--size", type=float, default=10.0, show_default=True,
                 help="Segment length, square side or circle radius (wavelengths)."),
    click.option("--region", type=click.Choice(["square", "circle"]), default="square"),
    click.option("--spacing", type=float, default=0.5, show_default=True),
]


def geometry_options(f):
    for opt in reversed(_geometry_opts):
        f = opt(f)
    return f


@click.group()
@click.option("--seed", type=int, default=None, help="Master seed (default 0 or the config's).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--trials", type=int, default=None, help="Monte Carlo trials (default 200).")
@click.option("--grid-step", type=float, default=None, help="MUSIC / correlation grid step.")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx, seed, out, fmt, trials, grid_step, verbose):
    """Placement optimisation and MUSIC validation for movable-antenna arrays."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"seed": seed, "out": out, "fmt": fmt, "trials": trials, "grid_step": grid_step}


@main.command("optimize-1d")
@click.option("--n", "n", type=int, required=True)
@click.option("--length", type=float, required=True)
@click.option("--spacing", type=float, default=0.5, show_default=True)
@click.pass_context
def optimize_1d_cmd(ctx, n, length, spacing):
    """Closed-form optimal positions on a segment."""
    seg = Segment1D(length, spacing, n)
    geom = optimal_apv_1d(seg)
    _write(ctx, _geometry_payload(geom, ctx.obj["fmt"], {"variance": p_closed_form(seg)}))


@main.command("optimize-2d")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--n", "n", type=int, default=36, show_default=True)
@click.option("--region", type=click.Choice(["square", "circle"]), default="square")
@click.option("--size", type=float, default=5.0, show_default=True)
@click.option("--spacing", type=float, default=0.5, show_default=True)
@click.option("--trace", type=click.Path(dir_okay=False), default=None, help="Write the SCA trace CSV.")
@click.pass_context
def optimize_2d_cmd(ctx, config, n, region, size, spacing, trace):
    """Alternating SCA placement in a square or circle (or every scheme of a config)."""
    if config:
        cfg = load_config(config)
        out = {}
        failed = False
        for scheme in cfg.schemes:
            geom, status = build_geometry(cfg, scheme)
            failed |= status != "ok"
            out[scheme] = {"xs": geom.xs.tolist(), "ys": geom.ys.tolist(),
                           "delta": minmax_delta(geom), "status": status}
        _write(ctx, json.dumps(out, indent=2) + "\n")
        ctx.exit(1 if failed else 0)
    scene = SensingScene(n, SpatialAngles(0.0, 0.0), min_spacing=spacing)
    geom, tr = optimize_2d(scene, _region(region, size), ScaConfig(seed=_seed(ctx)))
    if trace:
        tr.to_csv(trace)
    _write(ctx, _geometry_payload(geom, ctx.obj["fmt"],
                                  {"delta": minmax_delta(geom), "status": tr.status}))
    if tr.status not in ("converged", "max-iterations"):
        click.echo(f"SCA stopped: {tr.message}", err=True)
        ctx.exit(1)


@main.command("crb")
@geometry_options
@click.option("--u", type=float, default=0.71)
@click.option("--v", type=float, default=0.0)
@click.option("--snr-db", type=float, default=20.0)
@click.pass_context
def crb_cmd(ctx, geometry, scheme, n, size, region, spacing, u, v, snr_db):
    """CRB of a geometry (JSON output)."""
    geom = _resolve_geometry(geometry, scheme, n, size, region, spacing, snr_db, u, v)
    scene = SensingScene.from_snr_db(geom.n, SpatialAngles(u, v), snr_db, min_spacing=spacing)
    rep = crb_1d(scene, geom) if isinstance(geom, Geometry1D) else crb_2d(scene, geom)
    d = rep.to_dict()
    if isinstance(geom, Geometry2D) and not geometry:
        b = region_bounds(scene, _region(region, size))
        d["crb_lower_bound"] = b.crb_lower
    _write(ctx, json.dumps(d, indent=2) + "\n")


@main.command("music")
@geometry_options
@click.option("--u", type=float, default=0.71)
@click.option("--v", type=float, default=0.0)
@click.option("--snr-db", type=float, default=20.0)
@click.option("--spectrum", type=click.Path(dir_okay=False), default=None,
              help="Also write one trial's pseudo-spectrum CSV.")
@click.pass_context
def music_cmd(ctx, geometry, scheme, n, size, region, spacing, u, v, snr_db, spectrum):
    """Monte Carlo MUSIC MSE for a geometry."""
    geom = _resolve_geometry(geometry, scheme, n, size, region, spacing, snr_db, u, v)
    scene = SensingScene.from_snr_db(geom.n, SpatialAngles(u, v), snr_db, min_spacing=spacing)
    trials = ctx.obj["trials"] if ctx.obj["trials"] is not None else 200
    step = ctx.obj["grid_step"]
    tb = monte_carlo_mse(scene, geom, trials, _seed(ctx), grid_step=step)
    if spectrum:
        block = synthesize(scene, geom, _seed(ctx))
        planar = isinstance(geom, Geometry2D)
        fn = music_2d if planar else music_1d
        sp = fn(block, geom, step) if step else fn(block, geom)
        sp.to_csv(spectrum)
    _write(ctx, json.dumps(tb.to_dict(), indent=2) + "\n")


@main.command("correlate")
@geometry_options
@click.option("--u", type=float, default=0.71)
@click.option("--v", type=float, default=None, help="Give v for planar geometries.")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Map every scheme of a correlation config.")
@click.pass_context
def correlate_cmd(ctx, geometry, scheme, n, size, region, spacing, u, v, config):
    """Steering-vector correlation map as CSV."""
    if config:
        cfg = load_config(config)
        parts = []
        for i, name in enumerate(cfg.schemes):
            geom, _ = build_geometry(cfg, name)
            angles = (cfg.u, cfg.v) if cfg.dimension == 2 else cfg.u
            text = correlation_map(geom, angles, ctx.obj["grid_step"]).to_csv()
            lines = text.splitlines(keepends=True)
            if i == 0:
                parts.append("scheme," + lines[0])
            parts.extend(f"{name},{ln}" for ln in lines[1:])
        _write(ctx, "".join(parts))
        return
    geom = _resolve_geometry(geometry, scheme, n, size, region, spacing, 20.0, u, v or 0.0)
    angles = (u, v if v is not None else 0.0) if isinstance(geom, Geometry2D) else u
    cm = correlation_map(geom, angles, ctx.obj["grid_step"])
    _write(ctx, cm.to_csv())


@main.command("sweep")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def sweep_cmd(ctx, config):
    """Run a TOML scenario; exits 1 if any row failed."""
    cfg = load_config(config)
    if cfg.kind != "sweep":
        raise click.UsageError(f"{config} is a {cfg.kind!r} scenario; see the README for its command")
    over = {}
    if ctx.obj["trials"] is not None:
        over["trials"] = ctx.obj["trials"]
    if ctx.obj["grid_step"] is not None:
        over["grid_step"] = ctx.obj["grid_step"]
    if ctx.obj["seed"] is not None:
        over["seed"] = ctx.obj["seed"]
    if over:
        cfg = replace(cfg, **over)
    rows = run_scenario(cfg)
    path = ctx.obj["out"] or cfg.output
    text = emit(rows, ctx.obj["fmt"], path)
    if not path:
        click.echo(text, nl=False)
    for r in rows:
        if r.status != "ok":
            click.echo(f"row sweep={r.sweep} scheme={r.scheme}: {r.status}", err=True)
    ctx.exit(1 if any_failed(rows) else 0)


def run():  # pragma: no cover
    try:
        main(standalone_mode=True)
    except MALabError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":  # pragma: no cover
    run()
