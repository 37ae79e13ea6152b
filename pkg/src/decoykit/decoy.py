"""Biased-basis decoy-state bounds.

Single-photon and vacuum states are identical regardless of preparation
basis, so their yields depend only on the measurement basis. This lets the
analysis pool observations across preparation bases: for any measurement
basis w, every ordered source pair prepared in one basis bounds the same
averaged single-photon yield <s1^w>, and the best (largest) lower bound
wins. All bounds below are parameterized by a candidate vacuum yield
<s0^w>, whose feasible interval is computed here as well; the worst-case
key rate minimizes over that interval downstream.

Conventions: pair coefficients A^{j,k} = a_j(lo) a_k(hi) - a_j(hi) a_k(lo);
fluctuation intervals per the configured strategy; all yield bounds clamp
to [0,1] and error bounds to [0, 1/2].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import Observation, ObservedStats
from .errors import (
    AnalysisInfeasibleError,
    ErrorRateUnboundedError,
    InfeasibleStatisticsError,
    OrderingError,
    ParameterError,
)
from .sources import PhotonDistribution, ProtocolInstance, VACUUM_LABEL
from .stats import lambda_of, sampling_deviation, yield_interval


def n_k_photons(protocol: ProtocolInstance, label: str, k: int, basis: str) -> float:
    """Expected number of k-photon pulses from one source measured in one basis."""
    source = protocol.source(label)
    return source.dist.a(k) * source.prob * protocol.q(basis) * protocol.n_total


def pair_determinant(lo: PhotonDistribution, hi: PhotonDistribution, j: int, k: int) -> float:
    """A^{j,k} = a_j(lo) a_k(hi) - a_j(hi) a_k(lo)."""
    return lo.a(j) * hi.a(k) - hi.a(j) * lo.a(k)


def s_bounds(obs: Observation, epsilon: float, strategy: str, fluct_free: bool) -> tuple[float, float]:
    """Interval [S_lower, S_upper] for the mean yield behind an observation."""
    if fluct_free:
        return obs.S, obs.S
    iv = yield_interval(obs.S, obs.trials, epsilon, strategy)
    return iv.lower, iv.upper


def t_upper(obs: Observation, epsilon: float, strategy: str, fluct_free: bool) -> float:
    """Upper fluctuation value of the mean error yield behind an observation."""
    if fluct_free:
        return obs.T
    return yield_interval(obs.T, obs.trials, epsilon, strategy).upper


def s1_mean_lower_pair(
    lo: PhotonDistribution,
    hi: PhotonDistribution,
    s_lo_lower: float,
    s_hi_upper: float,
    s0_mean: float,
) -> float:
    """Averaged single-photon yield lower bound from one ordered source pair.

    Affine in the candidate vacuum yield:
        [a_2(hi) S_lower(lo) - a_2(lo) S_upper(hi) - A^{0,2} s0] / A^{1,2},
    clamped to [0,1].
    """
    a12 = pair_determinant(lo, hi, 1, 2)
    if a12 <= 0:
        raise OrderingError(f"degenerate source pair: A^(1,2) = {a12} is not positive")
    a02 = pair_determinant(lo, hi, 0, 2)
    value = (hi.a(2) * s_lo_lower - lo.a(2) * s_hi_upper - a02 * s0_mean) / a12
    return min(max(value, 0.0), 1.0)


def s1_mean_lower(
    pairs: Sequence[tuple[PhotonDistribution, PhotonDistribution, float, float]],
    s0_mean: float,
) -> float:
    """Best averaged single-photon yield lower bound over all preparation pairs.

    Each entry is (lo, hi, S_lower(lo), S_upper(hi)) for one pair measured in
    the basis under study. Pairs prepared in either basis bound the same
    quantity, so the maximum is taken across them.
    """
    if not pairs:
        raise AnalysisInfeasibleError("no ordered source pair available for the single-photon bound")
    return max(s1_mean_lower_pair(lo, hi, s_lo, s_hi, s0_mean) for lo, hi, s_lo, s_hi in pairs)


def s1_source_lower(mean_lower: float, n1: float, epsilon: float, fluct_free: bool = False) -> float:
    """Per-source single-photon yield lower bound mean*(1 - lambda/sqrt(n1*mean)).

    Returns 0 when the deviation term reaches 1 (too little data).
    """
    if mean_lower <= 0:
        return 0.0
    if n1 <= 0:
        raise ParameterError(f"single-photon pulse count must be positive, got {n1}")
    if fluct_free:
        return mean_lower
    delta = lambda_of(epsilon) / math.sqrt(n1 * mean_lower)
    if delta >= 1:
        return 0.0
    return mean_lower * (1 - delta)


def s0_interval(
    protocol: ProtocolInstance,
    stats: ObservedStats,
    basis: str,
    epsilon: float,
    strategy: str = "gaussian-approx",
    fluct_free: bool = False,
) -> tuple[float, float]:
    """Feasible interval for the averaged vacuum yield measured in ``basis``.

    With a vacuum source the interval is simply the fluctuation interval of
    its observed yield. Without one, the lower bound eliminates the
    single-photon term from each ordered pair and the upper bound attributes
    all errors (and all clicks of the weakest sources) to the vacuum.
    """
    if protocol.has_vacuum:
        obs = stats.get(VACUUM_LABEL, basis)
        return s_bounds(obs, epsilon, strategy, fluct_free)

    lows = [0.0]
    for lo_label, hi_label in protocol.prep_pairs():
        lo, hi = protocol.source(lo_label).dist, protocol.source(hi_label).dist
        a01 = pair_determinant(lo, hi, 0, 1)
        if a01 <= 0:
            raise OrderingError(f"degenerate source pair: A^(0,1) = {a01} is not positive")
        s_lo, _ = s_bounds(stats.get(lo_label, basis), epsilon, strategy, fluct_free)
        _, s_hi = s_bounds(stats.get(hi_label, basis), epsilon, strategy, fluct_free)
        lows.append((hi.a(1) * s_lo - lo.a(1) * s_hi) / a01)
    lower = max(lows)

    uppers = []
    first = basis + "1"
    if not protocol.has_source(first):
        raise AnalysisInfeasibleError(f"vacuum upper bound needs source {first}")
    t_up = t_upper(stats.get(first, basis), epsilon, strategy, fluct_free)
    uppers.append(2 * t_up / protocol.source(first).dist.a(0))
    for label in ("Z1", "X1"):
        if protocol.has_source(label):
            _, s_up = s_bounds(stats.get(label, basis), epsilon, strategy, fluct_free)
            uppers.append(s_up / protocol.source(label).dist.a(0))
    upper = min(min(uppers), 1.0)

    if lower > upper:
        # tolerate rounding-level collisions of exactly degenerate data
        if lower - upper > 1e-12 * max(lower, 1e-300):
            raise InfeasibleStatisticsError(
                f"empty vacuum-yield interval in basis {basis}: [{lower:.3e}, {upper:.3e}]"
            )
        lower = upper
    return lower, upper


def e1_upper(
    dist: PhotonDistribution,
    obs: Observation,
    s0_mean: float,
    s1_lower: float,
    epsilon: float,
    *,
    plain_T: bool = True,
    strategy: str = "gaussian-approx",
    fluct_free: bool = False,
) -> float:
    """Single-photon error rate upper bound from the error-test source.

    Subtracts the guaranteed vacuum-error content a_0 s0 (1 - delta0)/2 from
    the observed error yield and divides by the bounded single-photon error
    budget a_1 s1_lower. The numerator is floored at 0 and the result
    clamped to [0, 1/2]. ``plain_T`` uses the observed error yield directly;
    otherwise its upper fluctuation value is used.
    """
    if s1_lower <= 0:
        raise ErrorRateUnboundedError("single-photon yield lower bound is zero")
    t_eff = obs.T if plain_T else t_upper(obs, epsilon, strategy, fluct_free)
    n0 = dist.a(0) * obs.trials
    if fluct_free or s0_mean <= 0:
        delta0 = 0.0
    else:
        delta0 = lambda_of(epsilon) / math.sqrt(n0 * s0_mean)
    subtracted = dist.a(0) * s0_mean * max(1 - delta0, 0.0) / 2
    numerator = max(t_eff - subtracted, 0.0)
    return min(numerator / (dist.a(1) * s1_lower), 0.5)


def phase_error_upper(
    e1u: float, n_x: float, n_z: float, epsilon: float, fluct_free: bool = False
) -> float:
    """Phase error upper bound: the conjugate-basis error bound plus the sampling deviation."""
    if fluct_free:
        return min(e1u, 0.5)
    return min(e1u + sampling_deviation(n_x, n_z, e1u, epsilon), 0.5)


@dataclass(frozen=True)
class BoundSet:
    """All intermediate bounds at one (s0_z, s0_x) evaluation point, for audit."""

    s0_z: tuple[float, float]
    s0_x: tuple[float, float]
    s1_mean_z: float
    s1_mean_x: float
    s1_source: dict[str, float]
    e1_x1_upper: float | None
    e1_z1_upper: float | None
    phase_z_upper: float | None
    phase_x_upper: float | None

    def to_dict(self) -> dict:
        return {
            "s0_z_interval": list(self.s0_z),
            "s0_x_interval": list(self.s0_x),
            "s1_mean_z": self.s1_mean_z,
            "s1_mean_x": self.s1_mean_x,
            "s1_source": dict(self.s1_source),
            "e1_x1_upper": self.e1_x1_upper,
            "e1_z1_upper": self.e1_z1_upper,
            "phase_z_upper": self.phase_z_upper,
            "phase_x_upper": self.phase_x_upper,
        }


@dataclass(frozen=True)
class AveragedYieldModel:
    """Pooling weights behind the averaged-yield definitions.

    c_low[k] (k = 0, 1) pools every source across both preparation bases;
    c_high[basis][k] (k >= 2) pools within one preparation basis only,
    because multi-photon states are basis dependent.
    """

    c_low: np.ndarray
    c_high: dict[str, np.ndarray]

    @classmethod
    def from_protocol(cls, protocol: ProtocolInstance) -> "AveragedYieldModel":
        k_max = protocol.k_max
        c_low = np.zeros(2)
        c_high = {"Z": np.zeros(k_max + 1), "X": np.zeros(k_max + 1)}
        for s in protocol.sources:
            if s.label == VACUUM_LABEL:
                c_low[0] += s.prob  # vacuum source contributes a_0 = 1 only
                continue
            c_low += s.prob * s.dist.coeffs[:2]
            c_high[s.basis] += s.prob * s.dist.coeffs
        for arr in c_high.values():
            arr[:2] = 0.0
            arr.setflags(write=False)
        c_low.setflags(write=False)
        return cls(c_low=c_low, c_high=c_high)

    def mean_source_yield(self, dist: PhotonDistribution, s_mean: np.ndarray) -> float:
        """<S> = sum_k a_k <s_k> for hypothetical averaged per-photon yields."""
        return float(dist.coeffs @ np.asarray(s_mean, dtype=float))
