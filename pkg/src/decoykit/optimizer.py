"""Full protocol parameter optimization by coordinate descent.

The objective is the worst-case key rate of a candidate parameter set,
evaluated through the full pipeline (build, simulate, minimize over the
vacuum-yield region). Each coordinate is maximized in turn by a bounded
golden-section line search; per-coordinate bounds are recomputed from the
other coordinates so that the probability simplex and the intensity
ordering are never left. A sweep over all coordinates repeats until the
relative rate improvement drops below the tolerance, and the whole search
restarts from several seeded starting points.

Candidate points whose statistics are too sparse to bound (an infeasible
corner of the box) simply score zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, simulate_observed
from .config import AnalysisConfig
from .errors import InfeasibleStatisticsError, ParameterError
from .keyrate import KeyRateReport, worst_case_rate, _GOLDEN
from .sources import DEFAULT_K_MAX, FAMILIES, build_protocol, family_free_params

MU_MIN = 1e-4
MU_MAX = 1.0
#: Minimum gap keeping the intensity ordering strict.
MU_GAP = 1e-4
PROB_MIN = 1e-4
#: Probability mass reserved for the simplex-remainder source.
REMAINDER_MIN = 1e-3
Q_MIN = 1e-3


@dataclass(frozen=True)
class ParameterBox:
    """Free-parameter names, static bounds, and the dynamic feasibility rules."""

    family: str
    names: tuple[str, ...]
    lower: dict[str, float]
    upper: dict[str, float]

    @classmethod
    def for_family(cls, family: str) -> "ParameterBox":
        if family not in FAMILIES:
            raise ParameterError(f"unknown family {family!r}")
        names = family_free_params(family)
        lower, upper = {}, {}
        for name in names:
            if name.startswith("mu_"):
                lower[name], upper[name] = MU_MIN, MU_MAX
            elif name == "q_x":
                lower[name], upper[name] = Q_MIN, 1 - Q_MIN
            elif name == "ps_Z1":
                lower[name], upper[name] = 0.0, 1.0
            else:  # selection probabilities
                lower[name], upper[name] = PROB_MIN, 1.0 - REMAINDER_MIN
        return cls(family=family, names=names, lower=lower, upper=upper)

    def _prob_names(self) -> list[str]:
        return [n for n in self.names if n.startswith("p_")]

    @property
    def _mirror(self) -> int:
        # 3Int-0 mirrors every Z probability onto the X basis
        return 2 if self.family == "3Int-0" else 1

    def dynamic_bounds(self, name: str, params: dict) -> tuple[float, float]:
        """Feasible interval of one coordinate given the current values of the rest."""
        lo, hi = self.lower[name], self.upper[name]
        if name.startswith("p_"):
            others = sum(params[n] for n in self._prob_names() if n != name)
            hi = min(hi, (1.0 - self._mirror * others - REMAINDER_MIN) / self._mirror)
            if name == "p_Z1" and "ps_Z1" in params:
                lo = max(lo, params["ps_Z1"])
        elif name == "mu_Z1":
            hi = min(hi, params.get("mu_Z2", 0.479) - MU_GAP)
        elif name == "mu_Z2":
            lo = max(lo, params["mu_Z1"] + MU_GAP)
        elif name == "mu_X1":
            if "mu_X2" in params:
                hi = min(hi, params["mu_X2"] - MU_GAP)
        elif name == "mu_X2":
            lo = max(lo, params["mu_X1"] + MU_GAP)
        elif name == "ps_Z1":
            hi = min(hi, params["p_Z1"])
        return lo, hi

    def nominal_start(self) -> dict:
        """Deterministic default start: intensities 0.1/0.4, uniform probabilities, q_x = 0.5."""
        n_sources = {"3Int-0": 5, "3Int-1": 4, "4Int-1": 4, "4Int-2": 4, "5Int-1": 5}[self.family]
        p = 1.0 / n_sources
        start = {}
        for name in self.names:
            if name.startswith("p_"):
                start[name] = p
            elif name == "q_x":
                start[name] = 0.5
            elif name == "ps_Z1":
                start[name] = p / 2
            elif name in ("mu_Z1", "mu_X1"):
                start[name] = 0.1
            else:  # mu_Z2, mu_X2
                start[name] = 0.4
        return start

    def embed_subfamily(self, family: str, params: dict) -> dict:
        """Map an optimized sub-family parameter set into this box.

        4Int-1 contains 3Int-1 (free second intensity, untied X source).
        5Int-1 degenerates to 4Int-1 when the second X source gets almost no
        probability mass and every Z1 pulse feeds the key, and to 4Int-2 when
        the vacuum source gets almost none and no Z1 pulse does.
        """
        if self.family == "4Int-1" and family == "3Int-1":
            return {
                "p_Z1": params["p_Z1"],
                "p_Z2": params["p_Z2"],
                "p_X1": params["p_X1"],
                "mu_Z1": params["mu_Z1"],
                "mu_Z2": 0.479,
                "mu_X1": params["mu_Z1"],
                "q_x": params["q_x"],
            }
        if self.family != "5Int-1":
            raise ParameterError(f"no embedding from {family!r} into {self.family!r}")
        if family == "4Int-1":
            scale = 1.0 - REMAINDER_MIN  # leaves the remainder to X2
            p_o = 1.0 - params["p_Z1"] - params["p_Z2"] - params["p_X1"]
            mu_x2 = min(params["mu_X1"] + 0.15, MU_MAX)
            return {
                "p_Z1": params["p_Z1"] * scale,
                "p_Z2": params["p_Z2"] * scale,
                "p_X1": params["p_X1"] * scale,
                "p_O": max(p_o, PROB_MIN) * scale,
                "mu_Z1": params["mu_Z1"],
                "mu_Z2": params["mu_Z2"],
                "mu_X1": min(params["mu_X1"], mu_x2 - MU_GAP),
                "mu_X2": mu_x2,
                "q_x": params["q_x"],
                "ps_Z1": params["p_Z1"] * scale,
            }
        if family == "4Int-2":
            scale = 1.0 - PROB_MIN  # leaves a sliver to the vacuum source
            return {
                "p_Z1": params["p_Z1"] * scale,
                "p_Z2": params["p_Z2"] * scale,
                "p_X1": params["p_X1"] * scale,
                "p_O": PROB_MIN,
                "mu_Z1": params["mu_Z1"],
                "mu_Z2": params["mu_Z2"],
                "mu_X1": params["mu_X1"],
                "mu_X2": params["mu_X2"],
                "q_x": params["q_x"],
                "ps_Z1": 0.0,
            }
        raise ParameterError(f"no embedding from family {family!r}")

    def random_start(self, rng: np.random.Generator) -> dict:
        """Uniform-ish feasible point: Dirichlet probabilities, ordered intensities."""
        start = {}
        prob_names = self._prob_names()
        weights = rng.dirichlet(np.ones(len(prob_names) + 1))
        mass = (1.0 - REMAINDER_MIN) / self._mirror - PROB_MIN * len(prob_names)
        for name, w in zip(prob_names, weights):
            start[name] = PROB_MIN + mass * w
        for basis in ("Z", "X"):
            lo_name, hi_name = f"mu_{basis}1", f"mu_{basis}2"
            if lo_name in self.names and hi_name in self.names:
                b = rng.uniform(MU_MIN + 2 * MU_GAP, MU_MAX)
                start[hi_name] = b
                start[lo_name] = rng.uniform(MU_MIN, b - MU_GAP)
            elif lo_name in self.names:
                upper = self.dynamic_bounds(lo_name, start)[1]
                start[lo_name] = rng.uniform(MU_MIN, upper)
        if "q_x" in self.names:
            start["q_x"] = rng.uniform(0.05, 0.95)
        if "ps_Z1" in self.names:
            start["ps_Z1"] = rng.uniform(0.0, start["p_Z1"])
        return start


@dataclass(frozen=True)
class OptimizationResult:
    """Best parameters found, with enough bookkeeping to audit the search."""

    family: str
    best_params: dict
    best_rate: float
    report: KeyRateReport | None
    restarts_used: int
    seed: int
    trace: list = field(default_factory=list)  # per restart: best rate after each sweep

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "best_params": dict(self.best_params),
            "best_rate": self.best_rate,
            "report": self.report.to_dict() if self.report is not None else None,
            "restarts_used": self.restarts_used,
            "seed": self.seed,
            "trace": [list(t) for t in self.trace],
        }


def evaluate_params(
    family: str,
    params: dict,
    channel: ChannelParams,
    n_total: float,
    cfg: AnalysisConfig | None = None,
    k_max: int = DEFAULT_K_MAX,
    backend: str | None = None,
) -> KeyRateReport:
    """Single-point evaluation: build, simulate, take the worst-case rate."""
    cfg = cfg or AnalysisConfig()
    protocol = build_protocol(family, params, n_total, k_max)
    stats = simulate_observed(protocol, channel)
    return worst_case_rate(protocol, stats, cfg, backend=backend)


def _golden_max(f, a: float, b: float, evals: int) -> tuple[float, float]:
    """Golden-section maximization with a fixed, deterministic evaluation budget."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(evals):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize(
    family: str,
    channel: ChannelParams,
    n_total: float,
    *,
    restarts: int = 10,
    seed: int = 0,
    tolerance: float = 1e-4,
    max_sweeps: int = 30,
    line_search_evals: int = 12,
    cfg: AnalysisConfig | None = None,
    k_max: int = DEFAULT_K_MAX,
    backend: str | None = None,
) -> OptimizationResult:
    """Maximize the worst-case key rate over the family's free parameters.

    Deterministic for a fixed seed. Returns best_rate = 0 with the full
    trace when every restart is infeasible or rate-zero.
    """
    if restarts < 1:
        raise ParameterError(f"restarts must be at least 1, got {restarts}")
    box = ParameterBox.for_family(family)
    cfg = cfg or AnalysisConfig()
    rng = np.random.default_rng(seed)

    def objective(params: dict) -> float:
        try:
            return evaluate_params(family, params, channel, n_total, cfg, k_max, backend).rate
        except (InfeasibleStatisticsError, ParameterError):
            # sparse-statistics corners and numerically infeasible edges score zero
            return 0.0

    subfamilies = {"4Int-1": ("3Int-1",), "5Int-1": ("4Int-1", "4Int-2")}.get(family, ())
    deterministic = [box.nominal_start()]
    # seed larger boxes at the optima of the families they contain; gating each
    # embedding on its position keeps start lists prefix-stable across restarts
    for offset, sub in enumerate(subfamilies, start=1):
        if restarts <= offset:
            break
        inner = optimize(
            sub, channel, n_total,
            restarts=3, seed=seed + offset, tolerance=tolerance, max_sweeps=max_sweeps,
            line_search_evals=line_search_evals, cfg=cfg, k_max=k_max, backend=backend,
        )
        deterministic.append(box.embed_subfamily(sub, inner.best_params))
    starts = deterministic + [box.random_start(rng) for _ in range(restarts - len(deterministic))]

    best_params: dict | None = None
    best_rate = -math.inf
    trace: list[list[float]] = []
    for start in starts:
        params = dict(start)
        current = objective(params)
        restart_trace = [current]
        for _ in range(max_sweeps):
            previous = current
            for name in box.names:
                lo, hi = box.dynamic_bounds(name, params)
                if hi - lo < 1e-12:
                    continue

                def line(v: float, _name=name) -> float:
                    return objective({**params, _name: v})

                x, fx = _golden_max(line, lo, hi, line_search_evals)
                if fx > current:
                    params[name] = x
                    current = fx
            restart_trace.append(current)
            if current <= 0 or current - previous <= tolerance * abs(current):
                break
        trace.append(restart_trace)
        if current > best_rate:
            best_rate = current
            best_params = dict(params)

    try:
        report = evaluate_params(family, best_params, channel, n_total, cfg, k_max, backend)
        best_rate = report.rate
    except (InfeasibleStatisticsError, ParameterError):
        # every start was infeasible; return the zero result with diagnostics
        report = None
        best_rate = 0.0
    return OptimizationResult(
        family=family,
        best_params=best_params,
        best_rate=best_rate,
        report=report,
        restarts_used=len(starts),
        seed=seed,
        trace=trace,
    )
