"""Pure-numpy rate kernel: vectorized over arrays of vacuum-yield candidates."""
from __future__ import annotations

import numpy as np

from .context import RateContext

_LN2 = np.log(2.0)
_E1_FLOOR = 1e-12


def _entropy(x: np.ndarray) -> np.ndarray:
    inside = (x > 0.0) & (x < 1.0)
    xs = np.where(inside, x, 0.5)
    return np.where(inside, -(xs * np.log2(xs) + (1 - xs) * np.log2(1 - xs)), 0.0)


def _mean_s1_lower(pairs: np.ndarray, s0: np.ndarray) -> np.ndarray:
    m = np.zeros_like(s0)
    for const, a02, a12 in pairs:
        np.maximum(m, (const - a02 * s0) / a12, out=m)
    return np.minimum(m, 1.0)


def _s1_source_lower(m: np.ndarray, n1: float, lam: float) -> np.ndarray:
    safe = np.where(m > 0, m, 1.0)
    delta = np.where(m > 0, lam / np.sqrt(n1 * safe), np.inf)
    return np.where(delta < 1, m * (1 - delta), 0.0)


def _theta(e1: np.ndarray, n_x: float, n_z: float, log_eps: float) -> np.ndarray:
    e1c = np.clip(e1, _E1_FLOOR, 1 - _E1_FLOOR)
    total = n_x + n_z
    d_theta = (n_x * n_z / (total * total)) * _LN2 / (2 * (1 - e1c) * e1c)
    sqrt_arg = e1c * (1 - e1c) * (n_x * n_z / total)
    n_theta = -(log_eps + 0.5 * np.log(sqrt_arg)) / total
    theta = np.where(n_theta > 0, np.sqrt(np.maximum(n_theta, 0.0) / d_theta), 0.0)
    return np.minimum(theta, 0.5)


def _phase_error(
    test: np.ndarray,
    s0: np.ndarray,
    m: np.ndarray,
    th_counts: np.ndarray,
    lam: float,
    log_eps: float,
    theta_on: bool,
) -> np.ndarray:
    a0, a1, n0, n1, t_eff = test
    s1l = _s1_source_lower(m, n1, lam)
    ok = s1l > 0
    s0_safe = np.where(s0 > 0, s0, 1.0)
    delta0 = np.where(s0 > 0, lam / np.sqrt(n0 * s0_safe), 0.0)
    subtracted = a0 * s0 * np.maximum(1 - delta0, 0.0) / 2
    e1 = np.clip(np.maximum(t_eff - subtracted, 0.0) / (a1 * np.where(ok, s1l, 1.0)), 0.0, 0.5)
    if theta_on:
        e1 = np.minimum(e1 + _theta(e1, th_counts[0], th_counts[1], log_eps), 0.5)
    return np.where(ok, e1, 0.5)


def rate_grid(ctx: RateContext, s0_z, s0_x) -> np.ndarray:
    """Worst-case key rate at every broadcast (s0_z, s0_x) pair."""
    s0_z, s0_x = np.broadcast_arrays(np.asarray(s0_z, dtype=float), np.asarray(s0_x, dtype=float))
    m_z = _mean_s1_lower(ctx.pairs_z, s0_z)
    m_x = _mean_s1_lower(ctx.pairs_x, s0_x)
    e1p_z = (
        _phase_error(ctx.test_x, s0_x, m_x, ctx.theta_z, ctx.lam, ctx.log_eps, ctx.theta_on)
        if ctx.need_pz
        else None
    )
    e1p_x = (
        _phase_error(ctx.test_z, s0_z, m_z, ctx.theta_x, ctx.lam, ctx.log_eps, ctx.theta_on)
        if ctx.need_px
        else None
    )
    rate = np.zeros_like(s0_z)
    for is_z, weight, a1, n1, ec in ctx.terms:
        m = m_z if is_z else m_x
        s1l = _s1_source_lower(m, n1, ctx.lam)
        e1p = e1p_z if (is_z or ctx.rx2_literal) else e1p_x
        term = weight * (a1 * s1l * (1 - _entropy(e1p)) - ec)
        rate += np.maximum(term, 0.0)
    return rate
