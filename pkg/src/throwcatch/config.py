"""Run configuration: YAML on disk, validated pydantic models in memory.

Every section rejects unknown keys and wrong types; the resulting
:class:`ConfigError` names the dotted key that failed.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from throwcatch.errors import ConfigError

Pair = list[float]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, frozen=True)


class EnvConfig(_Section):
    dt: float = Field(1.0 / 60.0, gt=0)
    horizon: int = Field(120, ge=1)
    gravity: float = 9.81
    a_max: float = Field(30.0, gt=0)
    v_max: float = Field(4.0, gt=0)
    palm_radius: float = Field(0.06, gt=0)
    spring_k: float = Field(50.0, ge=0)
    damper_k: float = Field(5.0, ge=0)
    grip_rate: float = Field(20.0, gt=0)
    table_edge_x: float = -1.0
    table_z: float = 0.0
    goal_x: float = -0.5
    goal_height: float = 1.2
    palm_home: list[Pair] = Field(default_factory=lambda: [[0.0, 0.75], [0.0, 1.05]])

    @model_validator(mode="after")
    def _check_palms(self):
        if len(self.palm_home) != 2 or any(len(p) != 2 for p in self.palm_home):
            raise ValueError("palm_home must hold two [x, z] pairs")
        return self

    @property
    def goal(self) -> tuple[float, float]:
        return (self.goal_x, self.table_z + self.goal_height)


class ThrowConfig(_Section):
    v_base_linear: Pair = Field(default_factory=lambda: [5.0, 4.0], min_length=2, max_length=2)
    v_base_angular: float = 10.0
    noise_half_width: float = Field(0.5, gt=0)
    noise_scale: float = Field(1.0, gt=0)
    noise_mode: Literal["perturb_one_plus", "literal"] = "perturb_one_plus"
    spawn_offset: Pair = Field(default_factory=lambda: [0.2, 0.3], min_length=2, max_length=2)
    spawn_noise: float = Field(0.05, ge=0)
    action_limit_linear: float = Field(2.0, gt=0)
    action_limit_angular: float = Field(5.0, gt=0)


class RewardWeights(_Section):
    w0: float = 5.0
    w1: float = 1.0
    w2: float = 0.5
    w3: float = 0.5
    w4: float = 1e-3
    w5: float = 0.8
    w6: float = 0.2
    alpha: float = Field(0.7, ge=0.0, le=1.0)


class NetworkConfig(_Section):
    hidden_widths: list[int] = Field(default_factory=lambda: [64, 64], min_length=1)
    d2rl: bool = True


class GaeConfig(_Section):
    gamma: float = Field(0.99, gt=0.0, le=1.0)
    lam: float = Field(0.95, ge=0.0, le=1.0)


class PpoConfig(_Section):
    clip_eps: float = Field(0.2, gt=0)
    epochs_per_update: int = Field(5, ge=1)
    minibatches: int = Field(4, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    critic_learning_rate: float = Field(1e-3, gt=0)
    value_coef: float = Field(0.5, gt=0)
    value_scale: float = Field(50.0, gt=0)
    entropy_coef: float = Field(0.0, ge=0)
    max_grad_norm: float = Field(1.0, ge=0)
    kl_abort: float = Field(1.0, gt=0)


class ActionConfig(_Section):
    """Maps raw policy outputs to environment units."""

    accel_scale: float = Field(15.0, gt=0)
    throw_linear_scale: float = Field(1.0, gt=0)
    throw_angular_scale: float = Field(2.5, gt=0)


class AlphaSchedule(_Section):
    mode: Literal["fixed", "decay"] = "fixed"
    alpha_start: float = Field(0.7, ge=0.0, le=1.0)
    alpha_end: float = Field(0.7, ge=0.0, le=1.0)
    total_iters: int | None = Field(None, ge=1)

    @model_validator(mode="after")
    def _fixed_is_constant(self):
        if self.mode == "fixed" and self.alpha_start != self.alpha_end:
            raise ValueError("fixed schedule needs alpha_start == alpha_end")
        return self


class RunConfig(_Section):
    mode: Literal["sa", "harl"] = "harl"
    seed: int = 0
    iterations: int = Field(200, ge=0)
    envs_per_batch: int = Field(64, ge=1)
    steps_per_env: int = Field(120, ge=1)
    checkpoint_every: int = Field(50, ge=1)
    output_dir: str = "runs/default"
    env: EnvConfig = Field(default_factory=EnvConfig)
    throw: ThrowConfig = Field(default_factory=ThrowConfig)
    reward: RewardWeights = Field(default_factory=RewardWeights)
    actor: NetworkConfig = Field(default_factory=NetworkConfig)
    critic: NetworkConfig = Field(default_factory=NetworkConfig)
    gae: GaeConfig = Field(default_factory=GaeConfig)
    ppo: PpoConfig = Field(default_factory=PpoConfig)
    actions: ActionConfig = Field(default_factory=ActionConfig)
    alpha_schedule: AlphaSchedule | None = None

    @property
    def schedule(self) -> AlphaSchedule:
        if self.alpha_schedule is not None:
            return self.alpha_schedule
        return AlphaSchedule(mode="fixed", alpha_start=self.reward.alpha, alpha_end=self.reward.alpha)

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def replace(self, **changes) -> "RunConfig":
        """Copy with top-level or dotted-section overrides, re-validated."""
        data = self.to_dict()
        for key, value in changes.items():
            node = data
            *path, leaf = key.split(".")
            for part in path:
                node = node[part]
            node[leaf] = value
        return config_from_dict(data)


def _error_key(exc: ValidationError) -> ConfigError:
    err = exc.errors()[0]
    key = ".".join(str(p) for p in err["loc"]) or "<root>"
    return ConfigError(key, err["msg"])


def config_from_dict(data: dict | None) -> RunConfig:
    try:
        return RunConfig.model_validate(data or {})
    except ValidationError as exc:
        raise _error_key(exc) from None


def parse_config(path) -> RunConfig:
    text = Path(path).read_text()
    data = yaml.safe_load(text)
    if data is not None and not isinstance(data, dict):
        raise ConfigError("<root>", "top level must be a mapping")
    return config_from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
