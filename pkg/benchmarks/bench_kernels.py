"""Compare the compiled and numpy beam-power kernels.

    python benchmarks/bench_kernels.py [--repeat 20]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from ma_lab.kernels import backends

CASES = {
    # MUSIC / correlation grid for a 16-antenna segment at step 1e-3
    "1d  N=16  grid=2001": ("beam_power_1d", 16, 2001),
    # planar grid at step 4e-3 for N=36 and N=100
    "2d  N=36  grid=501^2": ("beam_power_2d", 36, 501),
    "2d  N=100 grid=501^2": ("beam_power_2d", 100, 501),
}


def _args(kind, n, m, rng):
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    g = np.linspace(-1, 1, m)
    x = rng.uniform(0, 10, n)
    if kind == "beam_power_1d":
        return (x, w, g, 2 * np.pi)
    return (x, rng.uniform(0, 10, n), w, g, g, 2 * np.pi)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=20)
    a = ap.parse_args(argv)
    impls = backends()
    rng = np.random.default_rng(0)
    print(f"{'case':24s}" + "".join(f"{k:>14s}" for k in impls) + "   max |diff|")
    for label, (kind, n, m) in CASES.items():
        args = _args(kind, n, m, rng)
        times, outs = [], []
        for mod in impls.values():
            fn = getattr(mod, kind)
            outs.append(fn(*args))
            times.append(min(timeit.repeat(lambda: fn(*args), number=1, repeat=a.repeat)))
        diff = max(float(np.abs(o - outs[0]).max()) for o in outs)
        print(f"{label:24s}" + "".join(f"{t * 1e3:11.3f} ms" for t in times) + f"   {diff:.2e}")


if __name__ == "__main__":
    main()
