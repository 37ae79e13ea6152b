"""Rate-kernel backend selection.

The compiled Cython kernel is preferred when importable; the numpy kernel
is the always-available fallback. Selection can be forced with the
environment variable DECOYKIT_KERNEL = "c" | "py" or per call.
"""
from __future__ import annotations

import os

import numpy as np

from . import pykernel
from .context import RateContext

try:
    from . import _ckernel
except ImportError:
    _ckernel = None

_ENV_VAR = "DECOYKIT_KERNEL"


def available_backends() -> tuple[str, ...]:
    return ("c", "py") if _ckernel is not None else ("py",)


def default_backend() -> str:
    forced = os.environ.get(_ENV_VAR)
    if forced:
        if forced not in ("c", "py"):
            raise ValueError(f"{_ENV_VAR} must be 'c' or 'py', got {forced!r}")
        if forced == "c" and _ckernel is None:
            raise ImportError(f"{_ENV_VAR}=c requested but the compiled kernel is not available")
        return forced
    return "c" if _ckernel is not None else "py"


def rate_grid(ctx: RateContext, s0_z, s0_x, backend: str | None = None) -> np.ndarray:
    """Evaluate the worst-case rate kernel on broadcast vacuum-yield arrays."""
    name = backend or default_backend()
    if name == "py":
        return pykernel.rate_grid(ctx, s0_z, s0_x)
    if name == "c":
        if _ckernel is None:
            raise ImportError("compiled kernel requested but not built")
        s0_z, s0_x = np.broadcast_arrays(
            np.asarray(s0_z, dtype=float), np.asarray(s0_x, dtype=float)
        )
        shape = s0_z.shape
        packed = ctx.pack()
        out = np.empty(s0_z.size)
        _ckernel.rate_grid(packed, np.ascontiguousarray(s0_z.ravel()),
                           np.ascontiguousarray(s0_x.ravel()), out)
        return out.reshape(shape)
    raise ValueError(f"unknown kernel backend {name!r}")


def rate_point(ctx: RateContext, s0_z: float, s0_x: float, backend: str | None = None) -> float:
    """Scalar convenience wrapper around rate_grid."""
    return float(rate_grid(ctx, np.array([s0_z]), np.array([s0_x]), backend)[0])
