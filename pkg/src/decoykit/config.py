"""Run configuration: channel defaults, analysis knobs, serialization.

The default configuration reproduces the standard experimental parameter
set used throughout the numerical studies: e_d = 0.033, p_d = 1.7e-6,
eta_d = 0.045, f_e = 1.16, eps = 1e-10, alpha = 0.2 dB/km.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

from .channel import ChannelParams
from .errors import ParameterError
from .sources import DEFAULT_K_MAX
from .stats import STRATEGIES

ENV_CONFIG_PATH = "DECOYKIT_CONFIG"
OUTPUT_FORMATS = ("json", "csv")


@dataclass(frozen=True)
class AnalysisConfig:
    """Knobs of the statistical analysis and the worst-case scan.

    ``eq18_literal`` feeds the observed error yield directly into the
    single-photon error bound; switching it off substitutes the upper
    fluctuation value (strictly more conservative, and noticeably more
    pessimistic at long distance). ``rx2_literal`` reuses the Z-side phase
    error inside the X-basis rate term instead of the X-side analog.
    """

    epsilon: float = 1e-10
    interval_strategy: str = "gaussian-approx"
    fluctuation_free: bool = False
    rx2_literal: bool = False
    eq18_literal: bool = True
    f_e: float = 1.16
    grid: int = 200
    refine_tol: float = 1e-4

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ParameterError(f"epsilon must lie in (0,1), got {self.epsilon}")
        if self.interval_strategy not in STRATEGIES:
            raise ParameterError(
                f"unknown interval strategy {self.interval_strategy!r}; choose from {STRATEGIES}"
            )
        if self.f_e < 1:
            raise ParameterError(f"error-correction inefficiency must be >= 1, got {self.f_e}")
        if self.grid < 2:
            raise ParameterError(f"grid resolution must be at least 2, got {self.grid}")
        if self.refine_tol <= 0:
            raise ParameterError(f"refinement tolerance must be positive, got {self.refine_tol}")


@dataclass(frozen=True)
class RunConfig:
    """Top-level configuration consumed by every CLI command."""

    channel: ChannelParams = field(default_factory=ChannelParams)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    k_max: int = DEFAULT_K_MAX
    output_format: str = "json"

    def __post_init__(self):
        if self.output_format not in OUTPUT_FORMATS:
            raise ParameterError(
                f"unknown output format {self.output_format!r}; choose from {OUTPUT_FORMATS}"
            )
        if self.k_max < 2:
            raise ParameterError(f"k_max must be at least 2, got {self.k_max}")

    def to_dict(self) -> dict:
        return {
            "channel": dataclasses.asdict(self.channel),
            "analysis": dataclasses.asdict(self.analysis),
            "k_max": self.k_max,
            "output_format": self.output_format,
        }


def _build_section(cls, data: dict, section: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ParameterError(f"unknown {section} config fields: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data: dict) -> RunConfig:
    known = {"channel", "analysis", "k_max", "output_format"}
    unknown = set(data) - known
    if unknown:
        raise ParameterError(f"unknown config fields: {sorted(unknown)}")
    channel = _build_section(ChannelParams, data.get("channel", {}), "channel")
    analysis = _build_section(AnalysisConfig, data.get("analysis", {}), "analysis")
    return RunConfig(
        channel=channel,
        analysis=analysis,
        k_max=int(data.get("k_max", DEFAULT_K_MAX)),
        output_format=data.get("output_format", "json"),
    )


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ParameterError(f"config file {path} must contain a JSON object")
    return config_from_dict(data)


def resolve_config(path: str | None) -> RunConfig:
    """Load the config from an explicit path, the environment, or defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH)
    if path:
        return load_config(path)
    return RunConfig()
