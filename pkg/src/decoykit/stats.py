"""Finite-size statistics: confidence intervals and the random-sampling deviation.

Two interval strategies are provided for the mean of an observed relative
frequency S over n trials:

``gaussian-approx`` (default)
    The symmetric multiplicative form [S/(1+delta), S/(1-delta)] with
    delta = lambda/sqrt(n S) and lambda = sqrt(-2 ln eps). This matches the
    structure of the per-quantity deviation terms used downstream.

``chernoff-exact``
    Asymmetric per-side deltas obtained by solving the multiplicative
    Chernoff tail equations at failure probability eps per side. The upper
    tail equation m [(1+d) ln(1+d) - d] = ln(1/eps) is solved numerically;
    the lower tail equation m d^2 / 2 = ln(1/eps) closes to a quadratic.

A zero observation returns [0, ln(1/eps)/n] under either strategy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import InfeasibleStatisticsError, ParameterError

STRATEGIES = ("gaussian-approx", "chernoff-exact")

#: Error-rate floor applied before the random-sampling deviation formula.
E1_FLOOR = 1e-12
#: Hard cap on any deviation added to an error rate.
THETA_CAP = 0.5


def lambda_of(epsilon: float) -> float:
    """The deviation scale sqrt(-2 ln eps)."""
    if not 0 < epsilon < 1:
        raise ParameterError(f"failure probability must lie in (0,1), got {epsilon}")
    return math.sqrt(-2.0 * math.log(epsilon))


@dataclass(frozen=True)
class FluctuationInterval:
    """Confidence interval for the mean of an observed relative frequency."""

    lower: float
    upper: float
    observed: float
    trials: float
    epsilon: float

    def __post_init__(self):
        if not 0 <= self.lower <= self.observed <= self.upper:
            raise InfeasibleStatisticsError(
                f"interval [{self.lower}, {self.upper}] does not bracket observation {self.observed}"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _chernoff_delta_lower(counts: float, log_inv_eps: float) -> float:
    """Solve m[(1+d)ln(1+d) - d] = ln(1/eps) with m = counts/(1+d); gives S_lower = S/(1+d)."""

    def f(d):
        return counts / (1 + d) * ((1 + d) * math.log1p(d) - d) - log_inv_eps

    hi = 1.0
    while f(hi) < 0:
        hi *= 2
        if hi > 1e12:
            raise InfeasibleStatisticsError("Chernoff lower-bound equation has no finite solution")
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=1e-14)


def _chernoff_delta_upper(counts: float, log_inv_eps: float) -> float:
    """Solve m d^2/2 = ln(1/eps) with m = counts/(1-d); gives S_upper = S/(1-d)."""
    # counts*d^2 + 2L*d - 2L = 0 with L = ln(1/eps); the positive root is < 1
    L = log_inv_eps
    return (-L + math.sqrt(L * L + 2 * counts * L)) / counts


def yield_interval(
    observed: float,
    trials: float,
    epsilon: float,
    strategy: str = "gaussian-approx",
) -> FluctuationInterval:
    """Interval for the mean yield (or error yield) behind an observed frequency."""
    if trials <= 0:
        raise ParameterError(f"trial count must be positive, got {trials}")
    if not 0 <= observed <= 1:
        raise ParameterError(f"observed frequency must lie in [0,1], got {observed}")
    if strategy not in STRATEGIES:
        raise ParameterError(f"unknown interval strategy {strategy!r}; choose from {STRATEGIES}")
    lam = lambda_of(epsilon)

    if observed == 0.0:
        upper = -math.log(epsilon) / trials
        return FluctuationInterval(0.0, upper, observed, trials, epsilon)

    counts = observed * trials
    if strategy == "gaussian-approx":
        delta = lam / math.sqrt(counts)
        if delta >= 1:
            raise InfeasibleStatisticsError(
                f"too few counts ({counts:.3g}) for epsilon={epsilon}: delta={delta:.3g} >= 1"
            )
        lower = observed / (1 + delta)
        upper = observed / (1 - delta)
    else:
        log_inv_eps = -math.log(epsilon)
        d_lo = _chernoff_delta_lower(counts, log_inv_eps)
        d_up = _chernoff_delta_upper(counts, log_inv_eps)
        lower = observed / (1 + d_lo)
        upper = observed / (1 - d_up)
    return FluctuationInterval(lower, upper, observed, trials, epsilon)


def sampling_deviation(n_x: float, n_z: float, e1: float, epsilon: float) -> float:
    """Random-sampling deviation linking conjugate-basis errors to the phase error.

    ``n_x`` and ``n_z`` are the single-photon pulse counts on the two sides
    of the sample split; ``e1`` is the error-rate estimate entering the
    variance terms, floored at E1_FLOOR. The result is capped at 0.5, and a
    nonpositive log term (overwhelming data) yields zero.
    """
    if not 0 < epsilon < 1:
        raise ParameterError(f"failure probability must lie in (0,1), got {epsilon}")
    if n_x <= 0 or n_z <= 0:
        raise InfeasibleStatisticsError("sampling deviation needs positive counts on both sides")
    e1 = min(max(e1, E1_FLOOR), 1 - E1_FLOOR)
    total = n_x + n_z
    sqrt_arg = e1 * (1 - e1) * (n_x * n_z / total)
    if sqrt_arg <= 0:
        raise InfeasibleStatisticsError("nonpositive argument inside the sampling-deviation root")
    # g(1-g) written as nx*nz/total^2 so the swap symmetry is float-exact
    d_theta = (n_x * n_z / (total * total)) * math.log(2.0) / (2 * (1 - e1) * e1)
    n_theta = -math.log(epsilon * math.sqrt(sqrt_arg)) / total
    if n_theta <= 0:
        return 0.0
    return min(math.sqrt(n_theta / d_theta), THETA_CAP)
