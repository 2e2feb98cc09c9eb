"""Backend selection for the beam-power kernels.

The compiled extension is used when it imports; ``MA_LAB_PURE_PYTHON=1``
forces the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

__all__ = ["BACKEND", "beam_power_1d", "beam_power_2d", "backends"]


def _load():
    if os.environ.get("MA_LAB_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "cython"


_impl, BACKEND = _load()
beam_power_1d = _impl.beam_power_1d
beam_power_2d = _impl.beam_power_2d


def backends() -> dict:
    """All importable implementations keyed by name (used by the benchmark)."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]
        out["cython"] = _kernels
    except ImportError:
        pass
    return out
