"""Pure-numpy reference implementations of the hot loops."""
from __future__ import annotations

import numpy as np

__all__ = ["beam_power_1d", "beam_power_2d"]


def beam_power_1d(x, w, grid, k):
    """``|sum_n w_n exp(j k x_n g)|^2`` for every ``g`` in ``grid``."""
    x = np.asarray(x, np.float64)
    w = np.asarray(w, np.complex128)
    g = np.asarray(grid, np.float64)
    c = np.exp(1j * k * np.outer(g, x)) @ w
    return c.real**2 + c.imag**2


def beam_power_2d(x, y, w, ugrid, vgrid, k):
    """``|sum_n w_n exp(j k (x_n u + y_n v))|^2`` on the ``len(ugrid) x len(vgrid)`` mesh."""
    x = np.asarray(x, np.float64)
    y = np.asarray(y, np.float64)
    w = np.asarray(w, np.complex128)
    eu = np.exp(1j * k * np.outer(np.asarray(ugrid, np.float64), x)) * w
    ev = np.exp(1j * k * np.outer(y, np.asarray(vgrid, np.float64)))
    c = eu @ ev
    return c.real**2 + c.imag**2
