"""Photon-number source models and validated protocol construction.

A source is described by its photon-number coefficients a_k (the diagonal of
the phase-randomized density matrix). Two sources in the same preparation
basis must satisfy the ratio ordering

    a_k(hi)/a_k(lo) >= a_1(hi)/a_1(lo) >= a_0(hi)/a_0(lo)   for all k >= 2,

written ``lo < hi``; this is what makes the two-source yield bounds valid.
Phase-randomized coherent states (Poisson statistics) always satisfy it.

Five protocol families are supported; each fixes which probabilities and
intensities are free, which are tied, and which sources feed the key:

==========  ===============================  ==========================
family      sources                          key distilled from
==========  ===============================  ==========================
3Int-0      O, Z1, Z2, X1, X2 (Z_j = X_j)    Z2 and X2
3Int-1      O, Z1, Z2, X1 (Z1 = X1)          Z1 and Z2
4Int-1      O, Z1, Z2, X1                    Z1 and Z2
4Int-2      Z1, Z2, X1, X2 (no vacuum)       Z2 and X2
5Int-1      O, Z1, Z2, X1, X2                Z2, X2 and a Z1 fraction
==========  ===============================  ==========================
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OrderingError, ParameterError

DEFAULT_K_MAX = 20
#: Construction fails when the truncated Poisson tail exceeds this mass.
TAIL_TOLERANCE = 1e-12
#: Source selection probabilities must sum to one within this tolerance.
NORMALIZATION_TOL = 1e-12

VACUUM_LABEL = "O"
FAMILIES = ("3Int-0", "3Int-1", "4Int-1", "4Int-2", "5Int-1")


@dataclass(frozen=True)
class PhotonDistribution:
    """Truncated photon-number probability vector of one source.

    Coefficients are never renormalized: the missing tail is treated as
    absent photons, so a_0/a_1 ratios used by the bounds stay exact.
    """

    coeffs: np.ndarray
    k_max: int
    intensity: float | None = None
    tail_tol: float = TAIL_TOLERANCE

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)  # private copy, frozen below
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.shape != (self.k_max + 1,):
            raise ParameterError(
                f"coefficient vector has length {coeffs.size}, expected k_max+1={self.k_max + 1}"
            )
        if np.any(coeffs < 0):
            raise ParameterError("photon-number coefficients must be nonnegative")
        total = float(coeffs.sum())
        if total > 1 + NORMALIZATION_TOL:
            raise ParameterError(f"photon-number coefficients sum to {total} > 1")
        if 1 - total >= self.tail_tol:
            raise ParameterError(
                f"truncated tail mass {1 - total:.3e} exceeds tolerance {self.tail_tol:.1e}; "
                "increase k_max"
            )

    def a(self, k: int) -> float:
        """Coefficient a_k."""
        return float(self.coeffs[k])

    @property
    def is_vacuum(self) -> bool:
        return self.intensity == 0.0 or (self.coeffs[0] == 1.0 and not self.coeffs[1:].any())


def poisson_distribution(mu: float, k_max: int = DEFAULT_K_MAX) -> PhotonDistribution:
    """Photon statistics of a phase-randomized coherent state of intensity mu."""
    if mu < 0:
        raise ParameterError(f"intensity must be nonnegative, got {mu}")
    if k_max < 2:
        raise ParameterError(f"k_max must be at least 2, got {k_max}")
    ks = np.arange(k_max + 1)
    if mu == 0:
        coeffs = np.zeros(k_max + 1)
        coeffs[0] = 1.0
    else:
        log_pmf = -mu + ks * math.log(mu) - np.array([math.lgamma(k + 1.0) for k in ks])
        coeffs = np.exp(log_pmf)
    return PhotonDistribution(coeffs=coeffs, k_max=k_max, intensity=float(mu))


def vacuum_distribution(k_max: int = DEFAULT_K_MAX) -> PhotonDistribution:
    """The vacuum source: a_0 = 1, intensity 0."""
    return poisson_distribution(0.0, k_max)


def check_order(lo: PhotonDistribution, hi: PhotonDistribution) -> bool:
    """True iff a_k(hi)/a_k(lo) >= a_1(hi)/a_1(lo) >= a_0(hi)/a_0(lo) for 2 <= k <= k_max."""
    if lo.k_max != hi.k_max:
        raise ParameterError("distributions must share k_max")
    a_lo, a_hi = lo.coeffs, hi.coeffs
    if a_lo[0] <= 0 or a_lo[1] <= 0:
        raise OrderingError("ordering undefined: a_0 and a_1 of the weaker source must be positive")
    undefined = (a_lo == 0) & (a_hi > 0)
    if undefined.any():
        k = int(np.argmax(undefined))
        raise OrderingError(f"ordering undefined: a_{k}=0 for the weaker source but not the stronger")
    if a_hi[1] * a_lo[0] < a_hi[0] * a_lo[1]:
        return False
    # cross-multiplied form of a_k(hi)/a_k(lo) >= a_1(hi)/a_1(lo), skipping 0/0 entries
    ks = np.arange(2, lo.k_max + 1)
    both = (a_lo[ks] > 0) | (a_hi[ks] > 0)
    ks = ks[both]
    return bool(np.all(a_hi[ks] * a_lo[1] >= a_hi[1] * a_lo[ks]))


@dataclass(frozen=True)
class SourceSpec:
    """One source of a protocol: label, photon statistics, selection probability."""

    label: str
    dist: PhotonDistribution
    prob: float

    def __post_init__(self):
        if self.label != VACUUM_LABEL and (
            len(self.label) != 2 or self.label[0] not in "ZX" or self.label[1] not in "12"
        ):
            raise ParameterError(f"unknown source label {self.label!r}")
        if not 0 <= self.prob <= 1:
            raise ParameterError(f"selection probability of {self.label} is {self.prob}, not in [0,1]")

    @property
    def basis(self) -> str:
        """Preparation basis: 'Z', 'X' or 'vacuum'."""
        return "vacuum" if self.label == VACUUM_LABEL else self.label[0]

    @property
    def index(self) -> int:
        return 0 if self.label == VACUUM_LABEL else int(self.label[1])


@dataclass(frozen=True)
class ProtocolInstance:
    """A fully specified, validated protocol.

    ``distill_plan`` lists (source label, fraction of that source's pulses
    used for key). The fraction is 1 except for the Z1 split of 5Int-1,
    where it equals p_s(Z1)/p(Z1).
    """

    sources: tuple[SourceSpec, ...]
    q_x: float
    n_total: float
    family: str
    distill_plan: tuple[tuple[str, float], ...]
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if not 0 < self.q_x < 1:
            raise ParameterError(f"q_x must lie strictly inside (0,1), got {self.q_x}")
        if self.n_total <= 0:
            raise ParameterError(f"n_total must be positive, got {self.n_total}")
        labels = [s.label for s in self.sources]
        if len(set(labels)) != len(labels):
            raise ParameterError(f"duplicate source labels: {labels}")
        total = sum(s.prob for s in self.sources)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ParameterError(f"normalization violated: source probabilities sum to {total!r}")
        k_maxes = {s.dist.k_max for s in self.sources}
        if len(k_maxes) != 1:
            raise ParameterError("all sources must share the same k_max")
        for lo_label, hi_label in self.prep_pairs():
            lo, hi = self.source(lo_label).dist, self.source(hi_label).dist
            if lo.intensity is not None and hi.intensity is not None:
                if lo.intensity >= hi.intensity:
                    raise ParameterError(
                        f"ordering violated: intensity of {lo_label} ({lo.intensity}) must be "
                        f"strictly below {hi_label} ({hi.intensity})"
                    )
            if not check_order(lo, hi):
                raise ParameterError(f"ordering violated for pair ({lo_label}, {hi_label})")
        for label, fraction in self.distill_plan:
            self.source(label)  # raises on unknown label
            if not 0 <= fraction <= 1:
                raise ParameterError(f"distill fraction of {label} is {fraction}, not in [0,1]")

    def source(self, label: str) -> SourceSpec:
        for s in self.sources:
            if s.label == label:
                return s
        raise ParameterError(f"protocol {self.family} has no source {label!r}")

    def has_source(self, label: str) -> bool:
        return any(s.label == label for s in self.sources)

    def q(self, basis: str) -> float:
        """Bob's measurement probability for the given basis."""
        if basis == "X":
            return self.q_x
        if basis == "Z":
            return 1.0 - self.q_x
        raise ParameterError(f"unknown measurement basis {basis!r}")

    @property
    def has_vacuum(self) -> bool:
        return self.has_source(VACUUM_LABEL)

    @property
    def k_max(self) -> int:
        return self.sources[0].dist.k_max

    def prep_pairs(self) -> tuple[tuple[str, str], ...]:
        """Ordered (weak, strong) source pairs per preparation basis."""
        pairs = []
        for basis in ("Z", "X"):
            if self.has_source(basis + "1") and self.has_source(basis + "2"):
                pairs.append((basis + "1", basis + "2"))
        return tuple(pairs)


# Per-family construction tables: free parameter names (order matters for the
# optimizer), pinned values, and which probability absorbs the remainder.
_FAMILY_FREE = {
    "3Int-0": ("p_Z1", "p_Z2", "mu_Z1", "mu_Z2"),
    "3Int-1": ("p_Z1", "p_Z2", "p_X1", "mu_Z1", "q_x"),
    "4Int-1": ("p_Z1", "p_Z2", "p_X1", "mu_Z1", "mu_Z2", "mu_X1", "q_x"),
    "4Int-2": ("p_Z1", "p_Z2", "p_X1", "mu_Z1", "mu_Z2", "mu_X1", "mu_X2", "q_x"),
    "5Int-1": ("p_Z1", "p_Z2", "p_X1", "p_O", "mu_Z1", "mu_Z2", "mu_X1", "mu_X2", "q_x", "ps_Z1"),
}
_FAMILY_PINNED = {
    "3Int-0": {"q_x": 0.5},
    "3Int-1": {"mu_Z2": 0.479},
    "4Int-1": {},
    "4Int-2": {},
    "5Int-1": {},
}
_FAMILY_REMAINDER = {
    "3Int-0": "p_O",
    "3Int-1": "p_O",
    "4Int-1": "p_O",
    "4Int-2": "p_X2",
    "5Int-1": "p_X2",
}


def family_free_params(family: str) -> tuple[str, ...]:
    if family not in FAMILIES:
        raise ParameterError(f"unknown family {family!r}")
    return _FAMILY_FREE[family]


def build_protocol(
    family: str,
    params: dict,
    n_total: float,
    k_max: int = DEFAULT_K_MAX,
) -> ProtocolInstance:
    """Construct a validated ProtocolInstance from a flat parameter map.

    ``params`` must supply exactly the family's free parameters. Pinned
    parameters (such as q_x of 3Int-0) may be supplied redundantly but must
    match the pinned value. Derived probabilities (the simplex remainder)
    are filled in here.
    """
    if family not in FAMILIES:
        raise ParameterError(f"unknown family {family!r}")
    free = set(_FAMILY_FREE[family])
    pinned = _FAMILY_PINNED[family]
    params = {k: float(v) for k, v in params.items()}

    unknown = set(params) - free - set(pinned)
    if unknown:
        raise ParameterError(f"unknown parameters for family {family}: {sorted(unknown)}")
    missing = free - set(params)
    if missing:
        raise ParameterError(f"missing parameters for family {family}: {sorted(missing)}")
    for name, value in pinned.items():
        if name in params and abs(params[name] - value) > 1e-12:
            raise ParameterError(
                f"{family} fixes {name} = {value}; got {params[name]} (pinned-parameter violation)"
            )
    full = dict(params, **pinned)

    if family == "3Int-0":
        mus = {"Z1": full["mu_Z1"], "Z2": full["mu_Z2"]}
        mus["X1"], mus["X2"] = mus["Z1"], mus["Z2"]
        probs = {"Z1": full["p_Z1"], "Z2": full["p_Z2"]}
        probs["X1"], probs["X2"] = probs["Z1"], probs["Z2"]
        plan = (("Z2", 1.0), ("X2", 1.0))
    elif family == "3Int-1":
        mus = {"Z1": full["mu_Z1"], "Z2": full["mu_Z2"], "X1": full["mu_Z1"]}
        probs = {"Z1": full["p_Z1"], "Z2": full["p_Z2"], "X1": full["p_X1"]}
        plan = (("Z1", 1.0), ("Z2", 1.0))
    elif family == "4Int-1":
        mus = {"Z1": full["mu_Z1"], "Z2": full["mu_Z2"], "X1": full["mu_X1"]}
        probs = {"Z1": full["p_Z1"], "Z2": full["p_Z2"], "X1": full["p_X1"]}
        plan = (("Z1", 1.0), ("Z2", 1.0))
    elif family == "4Int-2":
        mus = {k: full["mu_" + k] for k in ("Z1", "Z2", "X1", "X2")}
        probs = {k: full["p_" + k] for k in ("Z1", "Z2", "X1")}
        plan = (("Z2", 1.0), ("X2", 1.0))
    else:  # 5Int-1
        mus = {k: full["mu_" + k] for k in ("Z1", "Z2", "X1", "X2")}
        probs = {k: full["p_" + k] for k in ("Z1", "Z2", "X1")}
        probs[VACUUM_LABEL] = full["p_O"]
        ps = full["ps_Z1"]
        if ps > probs["Z1"] + 1e-15:
            raise ParameterError(
                f"ps_Z1 = {ps} exceeds p_Z1 = {probs['Z1']} (key split must stay within the source)"
            )
        fraction = 0.0 if probs["Z1"] == 0 else min(ps / probs["Z1"], 1.0)
        plan = (("Z2", 1.0), ("X2", 1.0), ("Z1", fraction))

    remainder_name = _FAMILY_REMAINDER[family]
    remainder = 1.0 - sum(probs.values())
    if remainder < -NORMALIZATION_TOL:
        raise ParameterError(
            f"normalization violated: supplied probabilities sum to {sum(probs.values())!r} > 1"
        )
    target = remainder_name.split("_", 1)[1] if remainder_name != "p_O" else VACUUM_LABEL
    probs[target] = max(remainder, 0.0)

    specs = [SourceSpec(lbl, poisson_distribution(mus[lbl], k_max), probs[lbl]) for lbl in mus]
    if family != "4Int-2":
        specs.append(SourceSpec(VACUUM_LABEL, vacuum_distribution(k_max), probs[VACUUM_LABEL]))
    full_params = dict(full)
    full_params[remainder_name] = probs[target]
    return ProtocolInstance(
        sources=tuple(specs),
        q_x=full["q_x"],
        n_total=float(n_total),
        family=family,
        distill_plan=plan,
        params=full_params,
    )
