"""Actor and critic containers plus the raw-action to environment-unit mapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from throwcatch.config import ActionConfig, RunConfig
from throwcatch.env import CATCHER_ACTION_DIM, CATCHER_OBS_DIM, GLOBAL_STATE_DIM, THROWER_ACTION_DIM, THROWER_OBS_DIM
from throwcatch.nn import GAUSSIAN, VALUE, NetworkSpec, OptimizerState, forward, init_params
from throwcatch.seeding import derive_seeds

CATCHER = "catcher"
THROWER = "thrower"


@dataclass
class Agent:
    role: str
    spec: NetworkSpec
    params: np.ndarray
    opt: OptimizerState


@dataclass
class Critic:
    spec: NetworkSpec
    params: np.ndarray
    opt: OptimizerState
    value_scale: float = 1.0

    def values(self, global_states: np.ndarray) -> np.ndarray:
        return self.value_scale * forward(self.spec, self.params, global_states)[..., 0]


def actor_spec(role: str, cfg: RunConfig) -> NetworkSpec:
    in_dim, out_dim = (CATCHER_OBS_DIM, CATCHER_ACTION_DIM) if role == CATCHER else (THROWER_OBS_DIM, THROWER_ACTION_DIM)
    return NetworkSpec(in_dim, tuple(cfg.actor.hidden_widths), out_dim, d2rl=cfg.actor.d2rl, head=GAUSSIAN)


def critic_spec(cfg: RunConfig) -> NetworkSpec:
    return NetworkSpec(GLOBAL_STATE_DIM, tuple(cfg.critic.hidden_widths), 1, d2rl=cfg.critic.d2rl, head=VALUE)


def roles_for(cfg: RunConfig) -> tuple[str, ...]:
    return (CATCHER, THROWER) if cfg.mode == "harl" else (CATCHER,)


def make_agents(cfg: RunConfig) -> tuple[dict[str, Agent], Critic]:
    agents = {}
    for role in roles_for(cfg):
        spec = actor_spec(role, cfg)
        params = init_params(spec, derive_seeds(cfg.seed, f"init:{role}"))
        agents[role] = Agent(role, spec, params, OptimizerState.fresh(spec.param_count, learning_rate=cfg.ppo.learning_rate))
    spec = critic_spec(cfg)
    params = init_params(spec, derive_seeds(cfg.seed, "init:critic"))
    critic = Critic(spec, params, OptimizerState.fresh(spec.param_count, learning_rate=cfg.ppo.critic_learning_rate),
                    cfg.ppo.value_scale)
    return agents, critic


def catcher_env_action(raw: np.ndarray, cfg: ActionConfig) -> np.ndarray:
    """Accelerations scale linearly; grip target is 0.5 + 0.5 * raw (clipped by the env)."""
    out = np.array(raw, dtype=np.float64, ndmin=2)
    for p in range(2):
        out[:, 3 * p : 3 * p + 2] *= cfg.accel_scale
        out[:, 3 * p + 2] = 0.5 + 0.5 * out[:, 3 * p + 2]
    return out


def thrower_env_action(raw: np.ndarray, cfg: ActionConfig) -> np.ndarray:
    scale = np.array([cfg.throw_linear_scale, cfg.throw_linear_scale, cfg.throw_angular_scale])
    return np.array(raw, dtype=np.float64, ndmin=2) * scale
