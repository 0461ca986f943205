"""Experiment configuration: one JSON file plus command-line overrides."""
import json
import os
import numpy as np
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.errors import ConfigError
from app.models.bandit import BanditSpec
from app.models.saddle import Variant
from app.models.toy import ToySpec
from app.simulation.rng import MAX_SEED

THREADS_ENV = "BANDIT_LDP_THREADS"

THREE_ARM_SPEC = BanditSpec(K=3, T=20, mu=(1.0, 2.0, 3.0), sigma_tilde=(1.0, 1.0, 1.0), gamma=0.36, beta=10.0,
                            c=0.4)


def _check_window(window: Tuple[float, float]) -> Tuple[float, float]:
    if not window[0] < window[1]:
        raise ValueError(f"window {window} must satisfy lo < hi")
    return window


def regular_grid(start: float, stop: float, step: float) -> List[float]:
    """start, start + step, ... up to stop inclusive, free of accumulated rounding."""
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SimulateBlock(_Block):
    trials: int = Field(1_000_000, ge=1)
    master_seed: int = Field(0, ge=0, le=MAX_SEED)
    bin_width: float = Field(0.5, gt=0.0)
    origin: float = 0.0
    windows: List[Tuple[float, float]] = Field(default_factory=list)

    @field_validator("windows")
    @classmethod
    def check_windows(cls, windows):
        return [_check_window(window) for window in windows]


class RateBlock(_Block):
    r_min: float = -15.0
    r_max: float = 45.0
    r_step: float = Field(1.0, gt=0.0)
    multistarts: int = Field(8, ge=0)
    variant: Variant = "simplified"
    c_values: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_range(self) -> "RateBlock":
        if self.r_min > self.r_max:
            raise ValueError("r_min must not exceed r_max")
        if any(c < 0 for c in self.c_values):
            raise ValueError("exploration parameters must be non-negative")
        return self

    def grid(self) -> List[float]:
        return regular_grid(self.r_min, self.r_max, self.r_step)


class TrajectoryBlock(_Block):
    r_window: Tuple[float, float] = (6.0, 6.5)
    trials: int = Field(1_000_000, ge=1)
    r_step: float = Field(0.5, gt=0.0)

    @field_validator("r_window")
    @classmethod
    def check_window(cls, window):
        return _check_window(window)


class ToyBlock(_Block):
    mu: Tuple[float, float] = (1.0, 2.0)
    gamma: float = Field(0.16, gt=0.0)
    beta: float = Field(10.0, ge=0.0)
    r_values: List[float] = Field(default_factory=lambda: [1.0, 3.0])
    bracket: Tuple[float, float] = (1.0, 3.0)

    @field_validator("bracket")
    @classmethod
    def check_bracket(cls, bracket):
        return _check_window(bracket)

    def toy_spec(self) -> ToySpec:
        return ToySpec(mu=self.mu, gamma=self.gamma, beta=self.beta)


class SweepBlock(_Block):
    c_values: List[float] = Field(default_factory=lambda: regular_grid(0.0, 1.0, 0.05), min_length=1)

    @field_validator("c_values")
    @classmethod
    def check_values(cls, values):
        if any(c < 0 for c in values):
            raise ValueError("exploration parameters must be non-negative")
        return values


class ExperimentConfig(_Block):
    spec: BanditSpec = THREE_ARM_SPEC
    simulate: SimulateBlock = Field(default_factory=SimulateBlock)
    rate: RateBlock = Field(default_factory=RateBlock)
    trajectory: TrajectoryBlock = Field(default_factory=TrajectoryBlock)
    toy: ToyBlock = Field(default_factory=ToyBlock)
    sweep: SweepBlock = Field(default_factory=SweepBlock)


def _read_payload(config_path: Optional[Path]) -> Dict[str, Any]:
    if config_path is None:
        return {}
    try:
        payload = json.loads(Path(config_path).read_text())
    except (OSError, json.JSONDecodeError) as error:
        raise ConfigError(f"cannot read config {config_path}: {error}")
    if not isinstance(payload, dict):
        raise ConfigError(f"config {config_path} must hold a JSON object")
    # a metadata.json from an earlier run carries its resolved config
    if {"command", "config"} <= payload.keys():
        payload = payload["config"]
    return payload


def load_experiment(config_path: Optional[Path] = None,
                    overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> ExperimentConfig:
    """Config file values, then flag overrides; flags left at None do not override."""
    payload = _read_payload(config_path)
    for block, values in (overrides or {}).items():
        given = {key: value for key, value in values.items() if value is not None}
        if not given:
            continue
        base = payload.get(block)
        if base is None:
            base = ExperimentConfig.model_fields[block].get_default(call_default_factory=True).model_dump()
        payload[block] = {**base, **given}
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as error:
        raise ConfigError(f"invalid configuration:\n{error}")


def resolve_workers(threads: Optional[int]) -> int:
    """--threads, else BANDIT_LDP_THREADS (read by click), else the CPU count."""
    if threads is not None:
        if threads < 1:
            raise ConfigError("--threads must be at least 1")
        return threads
    return os.cpu_count() or 1
