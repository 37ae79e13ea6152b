"""Secure key-rate evaluation and the worst-case vacuum-yield minimization.

The rate of one distilled source measured in basis w is

    R = p q^w { a_1 s_1^L [1 - H(e1p)] - f_e S H(E) },

floored at zero, where s_1^L is the per-source single-photon yield lower
bound, e1p the phase-error upper bound estimated from the conjugate basis,
and S, E the observed yield and error rate feeding error correction. Family
plans sum one to three such terms.

All bounds are functions of the candidate vacuum yields (<s0^Z>, <s0^X>).
The secure rate is the minimum over their feasible box: protocols that
distill only Z-measured bits scan <s0^X> with <s0^Z> pinned to its pessimal
interval endpoint (the bound is affine in <s0^Z>), while protocols that
distill both bases scan the full two-dimensional box. The minimum need not
sit at an endpoint, so the scan uses a uniform grid refined by
golden-section search around the best cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernel, decoy
from ._kernel.context import RateContext
from .channel import ObservedStats
from .config import AnalysisConfig
from .errors import ErrorRateUnboundedError, OrderingError, ParameterError
from .sources import ProtocolInstance
from .stats import lambda_of

#: Families whose worst case is a two-dimensional scan.
TWO_DIM_FAMILIES = ("3Int-0", "4Int-2", "5Int-1")

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def binary_entropy(x):
    """Binary Shannon entropy in bits, with H(0) = H(1) = 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        raise ParameterError(f"entropy argument must lie in [0,1], got {x}")
    inside = (arr > 0) & (arr < 1)
    xs = np.where(inside, arr, 0.5)
    out = np.where(inside, -(xs * np.log2(xs) + (1 - xs) * np.log2(1 - xs)), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KeyRateReport:
    """Worst-case rate, its vacuum-yield argmin, and all intermediate bounds."""

    rate: float
    argmin_s0: tuple[float, float]
    per_source_rates: dict[str, float]
    bounds_at_min: decoy.BoundSet
    scan_trace: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "argmin_s0": {"s0_z": self.argmin_s0[0], "s0_x": self.argmin_s0[1]},
            "per_source_rates": dict(self.per_source_rates),
            "bounds_at_min": self.bounds_at_min.to_dict(),
        }


@dataclass
class _Analysis:
    """Prepared per-(protocol, stats, config) state shared by kernel and audit paths."""

    protocol: ProtocolInstance
    stats: ObservedStats
    cfg: AnalysisConfig
    ctx: RateContext
    s0_z_interval: tuple[float, float]
    s0_x_interval: tuple[float, float]
    two_dim: bool
    s0_z_pessimal: float
    pairs: dict = field(default_factory=dict)  # basis -> [(lo, hi, S_lo_lower, S_hi_upper)]


def _prepare(protocol: ProtocolInstance, stats: ObservedStats, cfg: AnalysisConfig) -> _Analysis:
    eps = cfg.epsilon
    ff = cfg.fluctuation_free
    strategy = cfg.interval_strategy
    lam = 0.0 if ff else lambda_of(eps)

    s0_intervals = {
        b: decoy.s0_interval(protocol, stats, b, eps, strategy, ff) for b in ("Z", "X")
    }

    pairs = {"Z": [], "X": []}
    pair_rows = {"Z": [], "X": []}
    for basis in ("Z", "X"):
        for lo_label, hi_label in protocol.prep_pairs():
            lo = protocol.source(lo_label).dist
            hi = protocol.source(hi_label).dist
            s_lo, _ = decoy.s_bounds(stats.get(lo_label, basis), eps, strategy, ff)
            _, s_hi = decoy.s_bounds(stats.get(hi_label, basis), eps, strategy, ff)
            pairs[basis].append((lo, hi, s_lo, s_hi))
            const = hi.a(2) * s_lo - lo.a(2) * s_hi
            a02 = decoy.pair_determinant(lo, hi, 0, 2)
            a12 = decoy.pair_determinant(lo, hi, 1, 2)
            if a12 <= 0:
                raise OrderingError(
                    f"degenerate source pair ({lo_label}, {hi_label}): A^(1,2) = {a12}"
                )
            pair_rows[basis].append((const, a02, a12))

    terms = []
    for label, fraction in protocol.distill_plan:
        source = protocol.source(label)
        basis = source.basis
        obs = stats.get(label, basis)
        weight = source.prob * fraction * protocol.q(basis)
        n1 = decoy.n_k_photons(protocol, label, 1, basis)
        ec = cfg.f_e * obs.S * binary_entropy(obs.error_rate)
        terms.append((1.0 if basis == "Z" else 0.0, weight, source.dist.a(1), n1, ec))

    def test_row(label: str, basis: str) -> np.ndarray:
        dist = protocol.source(label).dist
        obs = stats.get(label, basis)
        t_eff = obs.T if cfg.eq18_literal else decoy.t_upper(obs, eps, strategy, ff)
        return np.array(
            [
                dist.a(0),
                dist.a(1),
                decoy.n_k_photons(protocol, label, 0, basis),
                decoy.n_k_photons(protocol, label, 1, basis),
                t_eff,
            ]
        )

    n1_z_all = sum(
        decoy.n_k_photons(protocol, s.label, 1, "Z") for s in protocol.sources if s.basis == "Z"
    )
    n1_x_all = sum(
        decoy.n_k_photons(protocol, s.label, 1, "X") for s in protocol.sources if s.basis == "X"
    )
    has_x_terms = any(t[0] == 0.0 for t in terms)
    ctx = RateContext(
        lam=lam,
        log_eps=math.log(eps),
        theta_on=not ff,
        rx2_literal=cfg.rx2_literal,
        need_pz=True,
        need_px=has_x_terms and not cfg.rx2_literal,
        pairs_z=np.array(pair_rows["Z"]).reshape(-1, 3),
        pairs_x=np.array(pair_rows["X"]).reshape(-1, 3),
        terms=np.array(terms).reshape(-1, 5),
        test_x=test_row("X1", "X"),
        test_z=test_row("Z1", "Z"),
        theta_z=np.array([decoy.n_k_photons(protocol, "X1", 1, "X"), n1_z_all]),
        theta_x=np.array([n1_x_all, decoy.n_k_photons(protocol, "Z1", 1, "Z")]),
    )

    two_dim = protocol.family in TWO_DIM_FAMILIES
    # The Z-measured single-photon bound is affine in <s0^Z>; its slope sign
    # picks the pessimal endpoint when <s0^Z> is not scanned.
    z_slopes = [row[1] for row in pair_rows["Z"]]
    lo_z, hi_z = s0_intervals["Z"]
    pessimal = hi_z if max(z_slopes) >= 0 else lo_z
    return _Analysis(
        protocol=protocol,
        stats=stats,
        cfg=cfg,
        ctx=ctx,
        s0_z_interval=s0_intervals["Z"],
        s0_x_interval=s0_intervals["X"],
        two_dim=two_dim,
        s0_z_pessimal=pessimal,
        pairs=pairs,
    )


def _audit_point(an: _Analysis, s0_z: float, s0_x: float):
    """Reference evaluation of the rate and all bounds at one vacuum-yield point."""
    cfg, protocol, stats = an.cfg, an.protocol, an.stats
    eps, ff = cfg.epsilon, cfg.fluctuation_free
    m_z = decoy.s1_mean_lower(an.pairs["Z"], s0_z)
    m_x = decoy.s1_mean_lower(an.pairs["X"], s0_x)

    def phase(test_label: str, basis: str, s0: float, m: float, n_x: float, n_z: float):
        dist = protocol.source(test_label).dist
        obs = stats.get(test_label, basis)
        n1 = decoy.n_k_photons(protocol, test_label, 1, basis)
        s1l = decoy.s1_source_lower(m, n1, eps, ff)
        try:
            e1 = decoy.e1_upper(
                dist, obs, s0, s1l, eps,
                plain_T=cfg.eq18_literal, strategy=cfg.interval_strategy, fluct_free=ff,
            )
        except ErrorRateUnboundedError:
            return None, 0.5
        return e1, decoy.phase_error_upper(e1, n_x, n_z, eps, ff)

    e1_x1, phase_z = phase("X1", "X", s0_x, m_x, an.ctx.theta_z[0], an.ctx.theta_z[1])
    e1_z1, phase_x = (None, None)
    if an.ctx.need_px:
        e1_z1, phase_x = phase("Z1", "Z", s0_z, m_z, an.ctx.theta_x[0], an.ctx.theta_x[1])

    per_source = {}
    rate = 0.0
    s1_sources = {}
    for label, fraction in protocol.distill_plan:
        source = protocol.source(label)
        basis = source.basis
        obs = stats.get(label, basis)
        m = m_z if basis == "Z" else m_x
        n1 = decoy.n_k_photons(protocol, label, 1, basis)
        s1l = decoy.s1_source_lower(m, n1, eps, ff)
        s1_sources[label] = s1l
        e1p = phase_z if (basis == "Z" or cfg.rx2_literal) else phase_x
        term = source.prob * fraction * protocol.q(basis) * (
            source.dist.a(1) * s1l * (1 - binary_entropy(e1p))
            - cfg.f_e * obs.S * binary_entropy(obs.error_rate)
        )
        per_source[label] = max(term, 0.0)
        rate += max(term, 0.0)

    bounds = decoy.BoundSet(
        s0_z=an.s0_z_interval,
        s0_x=an.s0_x_interval,
        s1_mean_z=m_z,
        s1_mean_x=m_x,
        s1_source=s1_sources,
        e1_x1_upper=e1_x1,
        e1_z1_upper=e1_z1,
        phase_z_upper=phase_z,
        phase_x_upper=phase_x,
    )
    return rate, bounds, per_source


def rate_at_s0(
    protocol: ProtocolInstance,
    stats: ObservedStats,
    s0_z: float,
    s0_x: float,
    cfg: AnalysisConfig | None = None,
) -> tuple[float, decoy.BoundSet]:
    """Key rate and full bound set at one candidate vacuum-yield point."""
    cfg = cfg or AnalysisConfig()
    an = _prepare(protocol, stats, cfg)
    tol = 1e-12
    for value, (lo, hi), name in (
        (s0_z, an.s0_z_interval, "s0_z"),
        (s0_x, an.s0_x_interval, "s0_x"),
    ):
        if not lo - tol <= value <= hi + tol:
            raise ParameterError(f"{name}={value} outside its feasible interval [{lo}, {hi}]")
    rate, bounds, _ = _audit_point(an, s0_z, s0_x)
    return rate, bounds


def _golden_min(
    f: Callable[[float], float], a: float, b: float, rel_tol: float, max_iter: int = 80
) -> tuple[float, float]:
    """Deterministic golden-section minimization on [a, b]."""
    if b <= a:
        return a, f(a)
    width0 = b - a
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        if b - a < 1e-3 * width0:
            break
        if b - a < 0.1 * width0 and abs(fc - fd) <= rel_tol * (abs(min(fc, fd)) + 1e-300):
            break
    return (c, fc) if fc <= fd else (d, fd)


def worst_case_rate(
    protocol: ProtocolInstance,
    stats: ObservedStats,
    cfg: AnalysisConfig | None = None,
    *,
    want_trace: bool = False,
    s0_z_fixed: float | None = None,
    backend: str | None = None,
) -> KeyRateReport:
    """Minimize the key rate over the feasible vacuum-yield region.

    One-dimensional families scan <s0^X> with <s0^Z> pinned at its pessimal
    endpoint; two-dimensional families scan the full box. ``s0_z_fixed``
    overrides the Z coordinate (used by the s0-scan command). A uniform grid
    of ``cfg.grid`` points per scanned axis is refined by golden-section
    search around the best cell.
    """
    cfg = cfg or AnalysisConfig()
    an = _prepare(protocol, stats, cfg)
    ctx = an.ctx
    grid_n = cfg.grid

    lo_x, hi_x = an.s0_x_interval
    xs = np.linspace(lo_x, hi_x, grid_n) if hi_x > lo_x else np.array([lo_x])
    if s0_z_fixed is not None:
        lo_z, hi_z = an.s0_z_interval
        if not lo_z - 1e-12 <= s0_z_fixed <= hi_z + 1e-12:
            raise ParameterError(
                f"s0_z={s0_z_fixed} outside its feasible interval [{lo_z}, {hi_z}]"
            )
        zs = np.array([s0_z_fixed])
    elif an.two_dim:
        lo_z, hi_z = an.s0_z_interval
        zs = np.linspace(lo_z, hi_z, grid_n) if hi_z > lo_z else np.array([lo_z])
    else:
        zs = np.array([an.s0_z_pessimal])

    grid = _kernel.rate_grid(ctx, zs[:, None], xs[None, :], backend=backend)
    flat_idx = int(np.argmin(grid))
    iz, ix = np.unravel_index(flat_idx, grid.shape)
    best_z, best_x = float(zs[iz]), float(xs[ix])
    best_r = float(grid[iz, ix])

    def cell_bracket(values: np.ndarray, i: int) -> tuple[float, float]:
        return float(values[max(i - 1, 0)]), float(values[min(i + 1, len(values) - 1)])

    rel_tol = cfg.refine_tol
    for _ in range(3):
        previous = best_r
        if len(xs) > 1:
            a, b = cell_bracket(xs, ix)
            x, r = _golden_min(
                lambda v: _kernel.rate_point(ctx, best_z, v, backend=backend), a, b, rel_tol
            )
            if r < best_r:
                best_r, best_x = r, x
        if len(zs) > 1:
            a, b = cell_bracket(zs, iz)
            z, r = _golden_min(
                lambda v: _kernel.rate_point(ctx, v, best_x, backend=backend), a, b, rel_tol
            )
            if r < best_r:
                best_r, best_z = r, z
        if previous - best_r <= rel_tol * (abs(best_r) + 1e-300):
            break

    rate, bounds, per_source = _audit_point(an, best_z, best_x)
    rate = min(rate, best_r)

    trace = None
    if want_trace:
        zz, xx = np.broadcast_arrays(zs[:, None], xs[None, :])
        trace = np.column_stack([xx.ravel(), zz.ravel(), grid.ravel()])

    return KeyRateReport(
        rate=rate,
        argmin_s0=(best_z, best_x),
        per_source_rates=per_source,
        bounds_at_min=bounds,
        scan_trace=trace,
    )
