"""Pipeline configuration: one dataclass per stage, JSON round-trip, paper defaults."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

CONFIG_SCHEMA = "reactmap/config-v1"

STAGES = ("simulate", "fusion", "costs", "transport", "dynamics")


@dataclass
class GeometryConfig:
    n_outer: int = 12
    n_inner: int = 6
    outer_radii: tuple[float, float] = (1.0, 0.75)
    inner_radii: tuple[float, float] = (0.45, 0.35)
    fa_high: float = 0.8
    fa_low: float = 0.15
    knn_k: int = 5


@dataclass
class FmriConfig:
    total_s: float = 300.0
    tr_s: float = 2.0
    fine_dt: float = 0.1
    noise_std: float = 0.15
    beta_active: float = 1.0
    beta_background: float = 0.1
    beta_intercept: float = 100.0


@dataclass
class EegConfig:
    n_sensors: int = 64
    sensor_radius: float = 1.5
    eps_lf: float = 0.1
    fs: float = 512.0
    duration_s: float = 1.0
    n_trials: int = 40
    noise_std: float = 0.2
    lambda_reg: float = 0.05
    stim_window: tuple[float, float] = (0.07, 0.2)
    react_window: tuple[float, float] = (0.3, 0.55)


@dataclass
class FusionConfig:
    w_f: float = 0.55
    eps0: float = 1e-6
    grid: tuple[float, ...] = (0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0)


@dataclass
class CostConfig:
    eps: float = 0.05
    c_iso: float = 1.0


@dataclass
class BotConfig:
    alpha: float = 0.65
    restarts: int = 12
    tol: float = 1e-6
    rel_threshold: float = 1e-4
    maxiter: int = 200
    smoothing: float = 1e-6
    perturbation: float = 0.05
    perturbation_max: float = 2.0


@dataclass
class DynamicsConfig:
    kappa: float = 0.8
    beta_dyn: float = 0.4
    sigma0: float = 0.08
    sigma1: float = 0.04
    t_sim: float = 3.0
    dt: float = 0.005
    n_paths: int = 80
    eps_bridge: float = 0.05
    stim_gain: float = 1.0
    stim_t_on: float = 0.0
    stim_t_off: float = 0.3
    weighted_cost: bool = True
    ensembles: str = "full"  # "full" long-format CSV or "summary" JSON only


@dataclass
class TradeoffConfig:
    alpha_grid_size: int = 22
    alpha_grid_lo: float = 0.20
    alpha_grid_hi: float = 0.92
    lambda_grid_size: int = 300
    lambda_grid_lo: float = 0.0
    lambda_grid_hi: float = 6.0
    double_paths: bool = True


@dataclass
class BenchmarkConfig:
    sizes: tuple[int, ...] = (18, 36, 60, 90, 120)
    knn_k: int = 5
    alpha: float = 0.65
    restarts: int = 2
    maxiter: int = 60
    source_fraction: float = 0.2


@dataclass
class PipelineConfig:
    master_seed: int = 7
    output_dir: str | None = None
    stages: tuple[str, ...] = STAGES
    cost_kind: str = "both"  # "isotropic" | "anisotropic" | "both"
    baselines: bool = True
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    fmri: FmriConfig = field(default_factory=FmriConfig)
    eeg: EegConfig = field(default_factory=EegConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    cost: CostConfig = field(default_factory=CostConfig)
    bot: BotConfig = field(default_factory=BotConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    tradeoff: TradeoffConfig = field(default_factory=TradeoffConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)


_SECTIONS = {
    "geometry": GeometryConfig,
    "fmri": FmriConfig,
    "eeg": EegConfig,
    "fusion": FusionConfig,
    "cost": CostConfig,
    "bot": BotConfig,
    "dynamics": DynamicsConfig,
    "tradeoff": TradeoffConfig,
    "benchmark": BenchmarkConfig,
}


def _untuple(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_untuple(v) for v in value]
    return value


def config_to_dict(config: PipelineConfig) -> dict:
    data: dict[str, Any] = {"schema": CONFIG_SCHEMA}
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if f.name in _SECTIONS:
            data[f.name] = {
                sf.name: _untuple(getattr(value, sf.name))
                for sf in dataclasses.fields(value)
            }
        else:
            data[f.name] = _untuple(value)
    return data


def _build_section(cls: type, data: dict, name: str) -> Any:
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ValueError(f"unknown {name} config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        default = fields[key].default
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> PipelineConfig:
    data = dict(data)
    schema = data.pop("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise ValueError(f"unsupported config schema {schema!r}")
    top_fields = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(data) - top_fields
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return PipelineConfig(**kwargs)
