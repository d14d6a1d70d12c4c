"""Planar throw-catch environment: objects, physics, rewards and observations."""

from throwcatch.env.core import (
    CATCHER_ACTION_DIM,
    CATCHER_OBS_DIM,
    GLOBAL_STATE_DIM,
    THROWER_ACTION_DIM,
    THROWER_OBS_DIM,
    Observation,
    RewardComponents,
    WorldState,
    blend_rewards,
    build_observations,
    check_failure,
    clamp_catcher_action,
    clamp_thrower_action,
    compose_throw_velocity,
    global_state,
    physics_step,
    reset,
    reset_envs,
    reward_catch,
    reward_throw,
    sample_throw_noise,
    step,
)
from throwcatch.env.objects import N_OBJECTS, ObjectSpec, object_by_name, object_catalog

__all__ = [
    "CATCHER_ACTION_DIM",
    "CATCHER_OBS_DIM",
    "GLOBAL_STATE_DIM",
    "N_OBJECTS",
    "THROWER_ACTION_DIM",
    "THROWER_OBS_DIM",
    "ObjectSpec",
    "Observation",
    "RewardComponents",
    "WorldState",
    "blend_rewards",
    "build_observations",
    "check_failure",
    "clamp_catcher_action",
    "clamp_thrower_action",
    "compose_throw_velocity",
    "global_state",
    "object_by_name",
    "object_catalog",
    "physics_step",
    "reset",
    "reset_envs",
    "reward_catch",
    "reward_throw",
    "sample_throw_noise",
    "step",
]
