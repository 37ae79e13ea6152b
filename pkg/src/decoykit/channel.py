"""Linear channel loss model: the yields and error yields an experiment would report.

The model assumes two threshold detectors per basis and counts an event as
successful when exactly one detector fires. With per-detector background
rate s0 and overall transmittance eta, the k-photon yield is

    same basis:       (1 - s0) [1 - (1 - 2 s0)(1 - eta)^k]
    different bases:  2 (1 - s0) [(1 - eta/2)^k - (1 - s0)(1 - eta)^k]

and the background-only error yield is e^_k = s0 (1 - s0)(1 - eta)^k. The
misalignment probability e_d flips signal-driven clicks, giving the
same-basis error yield

    T = e_d (S - 2 E^) + E^,       E^ = sum_k a_k e^_k,

which for a coherent source closes to E^ = s0 (1 - s0) exp(-mu eta). When
the bases differ the error rate is exactly one half, so T = S/2. Simulated
values are expectation values used directly as observed relative
frequencies; an optional seeded binomial sampling pass is available for
robustness studies.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .errors import DecoyKitError, ParameterError
from .sources import ProtocolInstance, SourceSpec

#: Tolerance for the closed-form vs truncated-sum self check.
CLOSED_FORM_TOL = 1e-10


@dataclass(frozen=True)
class ChannelParams:
    """Fiber channel and detection parameters (defaults from the standard set).

    ``eta_z_override`` / ``eta_x_override`` replace the computed overall
    transmittance of one measurement basis, which is how detector-efficiency
    mismatch between bases is modeled.
    """

    distance_km: float = 0.0
    loss_db_per_km: float = 0.2
    det_eff: float = 0.045
    dark: float = 1.7e-6
    misalign: float = 0.033
    eta_z_override: float | None = None
    eta_x_override: float | None = None

    def __post_init__(self):
        if self.distance_km < 0:
            raise ParameterError(f"distance must be nonnegative, got {self.distance_km}")
        if self.loss_db_per_km < 0:
            raise ParameterError(f"loss coefficient must be nonnegative, got {self.loss_db_per_km}")
        for name in ("det_eff", "dark", "misalign"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ParameterError(f"{name} must lie in [0,1], got {v}")
        for name in ("eta_z_override", "eta_x_override"):
            v = getattr(self, name)
            if v is not None and not 0 <= v <= 1:
                raise ParameterError(f"{name} must lie in [0,1], got {v}")


def overall_transmittance(ch: ChannelParams, basis: str) -> float:
    """Overall transmittance for the given measurement basis, including detection."""
    if basis == "Z" and ch.eta_z_override is not None:
        return ch.eta_z_override
    if basis == "X" and ch.eta_x_override is not None:
        return ch.eta_x_override
    return ch.det_eff * 10.0 ** (-ch.loss_db_per_km * ch.distance_km / 10.0)


def yield_k(k, s0: float, eta: float, same_basis: bool):
    """Yield of a k-photon state. Accepts scalar or array k."""
    k = np.asarray(k)
    if same_basis:
        out = (1 - s0) * (1 - (1 - 2 * s0) * (1 - eta) ** k)
    else:
        out = 2 * (1 - s0) * ((1 - eta / 2) ** k - (1 - s0) * (1 - eta) ** k)
    return float(out) if out.ndim == 0 else out


def error_hat_k(k, s0: float, eta: float):
    """Background-only error yield of a k-photon state (same-basis case)."""
    k = np.asarray(k)
    out = s0 * (1 - s0) * (1 - eta) ** k
    return float(out) if out.ndim == 0 else out


def error_rate_k(k, s0: float, eta: float, e_d: float):
    """Error rate of a k-photon state including misalignment (same-basis case)."""
    ehat = error_hat_k(k, s0, eta)
    return e_d * (1 - 2 * ehat) + ehat


@dataclass(frozen=True)
class Observation:
    """Observed yield S, error yield T and trial count of one (source, basis) cell."""

    S: float
    T: float
    trials: float

    def __post_init__(self):
        if not 0 <= self.T <= self.S <= 1:
            raise ParameterError(f"observation must satisfy 0 <= T <= S <= 1, got T={self.T}, S={self.S}")
        if self.trials <= 0:
            raise ParameterError(f"trial count must be positive, got {self.trials}")

    @property
    def error_rate(self) -> float:
        """Quantum bit error rate E = T/S (zero when nothing was detected)."""
        return self.T / self.S if self.S > 0 else 0.0


@dataclass(frozen=True)
class ObservedStats:
    """Map from (source label, measurement basis) to an Observation."""

    entries: Mapping[tuple[str, str], Observation]

    def get(self, label: str, basis: str) -> Observation:
        try:
            return self.entries[(label, basis)]
        except KeyError:
            raise ParameterError(f"no observation for source {label!r} in basis {basis!r}") from None

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(self.entries)

    def to_dict(self) -> list[dict]:
        return [
            {"source": lbl, "basis": basis, "S": obs.S, "T": obs.T, "trials": obs.trials}
            for (lbl, basis), obs in sorted(self.entries.items())
        ]

    @classmethod
    def from_dict(cls, rows: list[dict]) -> "ObservedStats":
        entries = {}
        for row in rows:
            entries[(row["source"], row["basis"])] = Observation(
                S=float(row["S"]), T=float(row["T"]), trials=float(row["trials"])
            )
        return cls(entries=entries)


def _simulate_cell(source: SourceSpec, eta: float, s0: float, e_d: float, same: bool, validate: bool):
    dist = source.dist
    mu = dist.intensity
    if mu is not None:
        # expm1 keeps the near-vacuum limit exact: at mu*eta = 0 both branches
        # reduce to 2 s0 (1 - s0) bit-for-bit
        if same:
            S = (1 - s0) * (-np.expm1(-mu * eta) + 2 * s0 * np.exp(-mu * eta))
            ehat = s0 * (1 - s0) * np.exp(-mu * eta)
        else:
            half = np.exp(-mu * eta / 2)
            S = 2 * (1 - s0) * half * (-np.expm1(-mu * eta / 2) + s0 * half)
            ehat = None
        if validate:
            ks = np.arange(dist.k_max + 1)
            S_sum = float(dist.coeffs @ yield_k(ks, s0, eta, same))
            if abs(S_sum - S) > CLOSED_FORM_TOL:
                raise DecoyKitError(
                    f"closed-form yield {S!r} disagrees with truncated sum {S_sum!r} "
                    f"for mu={mu}, eta={eta}"
                )
    else:
        ks = np.arange(dist.k_max + 1)
        S = float(dist.coeffs @ yield_k(ks, s0, eta, same))
        ehat = float(dist.coeffs @ error_hat_k(ks, s0, eta)) if same else None
    if same:
        T = e_d * (S - 2 * ehat) + ehat
    else:
        T = S / 2
    return float(S), float(T)


def simulate_observed(
    protocol: ProtocolInstance, ch: ChannelParams, *, validate: bool = False
) -> ObservedStats:
    """Expected yields and error yields for every (source, measurement basis) cell.

    With ``validate=True`` the coherent closed forms are checked against the
    truncated photon-number sums on every cell.
    """
    s0 = ch.dark
    e_d = ch.misalign
    entries = {}
    for basis in ("Z", "X"):
        eta = overall_transmittance(ch, basis)
        for source in protocol.sources:
            same = source.basis == basis
            S, T = _simulate_cell(source, eta, s0, e_d, same, validate)
            trials = source.prob * protocol.q(basis) * protocol.n_total
            entries[(source.label, basis)] = Observation(S=S, T=T, trials=trials)
    return ObservedStats(entries=entries)


def sample_observed(stats: ObservedStats, rng: np.random.Generator) -> ObservedStats:
    """Binomially perturbed copy of simulated statistics (robustness testing)."""
    entries = {}
    for key, obs in stats.entries.items():
        n = int(round(obs.trials))
        hits = rng.binomial(n, obs.S)
        errs = rng.binomial(hits, obs.T / obs.S) if hits > 0 and obs.S > 0 else 0
        entries[key] = Observation(S=hits / n, T=errs / n, trials=float(n))
    return ObservedStats(entries=entries)
