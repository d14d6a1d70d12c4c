"""Planar throw-catch world: x points from the thrower toward the catcher, z is up.

All state is batched: every array carries a leading environment axis, so a
single environment is simply a batch of one. Each environment owns its own
random generator for resets and throw noise.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from throwcatch import _kernels
from throwcatch.config import EnvConfig, RewardWeights, ThrowConfig
from throwcatch.env.objects import MASSES, N_OBJECTS, RADII
from throwcatch.errors import NonFiniteError

CATCHER_OBS_DIM = 35
THROWER_OBS_DIM = CATCHER_OBS_DIM + 1
GLOBAL_STATE_DIM = 34
CATCHER_ACTION_DIM = 6
THROWER_ACTION_DIM = 3
ANGULAR_VELOCITY_WEIGHT = 0.1

DEFAULT_ENV = EnvConfig()
DEFAULT_THROW = ThrowConfig()
DEFAULT_WEIGHTS = RewardWeights()


@dataclass
class WorldState:
    obj_pos: np.ndarray  # (n, 2)
    obj_vel: np.ndarray  # (n, 2)
    obj_angle: np.ndarray  # (n,)
    obj_angvel: np.ndarray  # (n,)
    palm_pos: np.ndarray  # (n, 2 palms, 2)
    palm_vel: np.ndarray  # (n, 2 palms, 2)
    grip: np.ndarray  # (n, 2)
    t: np.ndarray  # (n,) int
    active_object: np.ndarray  # (n,) int
    thrown: np.ndarray  # (n,) bool

    @property
    def n(self) -> int:
        return self.obj_pos.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "WorldState":
        return cls(
            obj_pos=np.zeros((n, 2)),
            obj_vel=np.zeros((n, 2)),
            obj_angle=np.zeros(n),
            obj_angvel=np.zeros(n),
            palm_pos=np.zeros((n, 2, 2)),
            palm_vel=np.zeros((n, 2, 2)),
            grip=np.zeros((n, 2)),
            t=np.zeros(n, dtype=np.int64),
            active_object=np.zeros(n, dtype=np.int64),
            thrown=np.zeros(n, dtype=bool),
        )

    def copy(self) -> "WorldState":
        return WorldState(**{f.name: getattr(self, f.name).copy() for f in fields(self)})

    def select(self, idx) -> "WorldState":
        return WorldState(**{f.name: np.ascontiguousarray(getattr(self, f.name)[idx]) for f in fields(self)})

    def check_finite(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if value.dtype.kind == "f" and not np.all(np.isfinite(value)):
                raise NonFiniteError(f"non-finite world state field {f.name}")


@dataclass
class Observation:
    catcher: np.ndarray  # (n, 35)
    thrower: np.ndarray  # (n, 36)


@dataclass
class RewardComponents:
    r_hand_dist: np.ndarray
    r_goal: np.ndarray
    r_finger_contact: np.ndarray
    r_arm_contact: np.ndarray
    r_catcher_action: np.ndarray
    r_object_velocity: np.ndarray
    r_thrower_action: np.ndarray
    r_catch: np.ndarray
    r_throw: np.ndarray
    r_total: np.ndarray

    def row(self, i: int) -> dict:
        return {f.name: float(getattr(self, f.name)[i]) for f in fields(self)}


def _rng_list(rngs, n: int):
    if isinstance(rngs, np.random.Generator):
        rngs = [rngs]
    if len(rngs) != n:
        raise ValueError(f"need one generator per environment ({n}), got {len(rngs)}")
    return rngs


def reset_envs(state: WorldState, idx, rngs, throw_cfg: ThrowConfig = DEFAULT_THROW,
               env_cfg: EnvConfig = DEFAULT_ENV) -> None:
    """Reset the environments listed in ``idx`` in place; ``rngs`` is indexed by env."""
    home = np.asarray(env_cfg.palm_home, dtype=np.float64)
    sx, sz = throw_cfg.spawn_offset
    noise = throw_cfg.spawn_noise
    for i in idx:
        rng = rngs[i]
        obj = int(rng.integers(N_OBJECTS))
        jitter = rng.uniform(-noise, noise, size=2)
        state.active_object[i] = obj
        state.obj_pos[i] = (env_cfg.table_edge_x + sx + jitter[0], env_cfg.table_z + sz + jitter[1])
        state.obj_vel[i] = 0.0
        state.obj_angle[i] = 0.0
        state.obj_angvel[i] = 0.0
        state.palm_pos[i] = home
        state.palm_vel[i] = 0.0
        state.grip[i] = 0.0
        state.t[i] = 0
        state.thrown[i] = False


def reset(rngs, throw_cfg: ThrowConfig = DEFAULT_THROW, env_cfg: EnvConfig = DEFAULT_ENV):
    """Fresh batch with one environment per generator; returns ``(state, observation)``."""
    if isinstance(rngs, np.random.Generator):
        rngs = [rngs]
    state = WorldState.zeros(len(rngs))
    reset_envs(state, range(len(rngs)), rngs, throw_cfg, env_cfg)
    return state, build_observations(state, env_cfg)


def sample_throw_noise(rng: np.random.Generator, cfg: ThrowConfig = DEFAULT_THROW) -> np.ndarray:
    """One uniform draw per velocity component (vx, vz, angular)."""
    half = cfg.noise_half_width * cfg.noise_scale
    return rng.uniform(-half, half, size=THROWER_ACTION_DIM)


def clamp_thrower_action(v_action, cfg: ThrowConfig = DEFAULT_THROW) -> np.ndarray:
    v_action = np.asarray(v_action, dtype=np.float64)
    out = np.empty_like(v_action)
    out[..., :2] = np.clip(v_action[..., :2], -cfg.action_limit_linear, cfg.action_limit_linear)
    out[..., 2] = np.clip(v_action[..., 2], -cfg.action_limit_angular, cfg.action_limit_angular)
    return out


def compose_throw_velocity(cfg: ThrowConfig, eps_draws, v_action) -> np.ndarray:
    """Throw velocity ``[vx, vz, omega]``: base perturbed by noise plus the clamped thrower action."""
    eps = np.asarray(eps_draws, dtype=np.float64)
    base = np.array([*cfg.v_base_linear, cfg.v_base_angular])
    v_action = clamp_thrower_action(v_action, cfg)
    if cfg.noise_mode == "perturb_one_plus":
        return base * (1.0 + eps) + v_action
    return base * eps + v_action


def clamp_catcher_action(action, env_cfg: EnvConfig = DEFAULT_ENV) -> np.ndarray:
    """Per palm ``[ax, az, grip]``: acceleration norm capped at ``a_max``, grip target in [0, 1]."""
    action = np.array(action, dtype=np.float64, ndmin=2)
    out = action.copy()
    for p in range(2):
        a = action[:, 3 * p : 3 * p + 2]
        norm = np.sqrt(a[:, 0] * a[:, 0] + a[:, 1] * a[:, 1])
        over = norm > env_cfg.a_max
        out[over, 3 * p : 3 * p + 2] = a[over] * env_cfg.a_max / norm[over, None]
        out[:, 3 * p + 2] = np.clip(action[:, 3 * p + 2], 0.0, 1.0)
    return out


def _advance(state: WorldState, applied: np.ndarray, env_cfg: EnvConfig) -> WorldState:
    new = state.copy()
    accel = np.ascontiguousarray(applied.reshape(-1, 2, 3)[:, :, :2])
    grip_target = np.ascontiguousarray(applied.reshape(-1, 2, 3)[:, :, 2])
    _kernels.physics_step(
        new.obj_pos, new.obj_vel, new.obj_angle, new.obj_angvel, new.palm_pos, new.palm_vel,
        new.grip, accel, grip_target, RADII[new.active_object], MASSES[new.active_object],
        env_cfg.dt, env_cfg.gravity, env_cfg.v_max, env_cfg.palm_radius, env_cfg.spring_k,
        env_cfg.damper_k, min(1.0, env_cfg.grip_rate * env_cfg.dt),
    )
    new.t += 1
    return new


def physics_step(state: WorldState, catcher_action, env_cfg: EnvConfig = DEFAULT_ENV) -> WorldState:
    """One semi-implicit Euler step (velocities first, then positions)."""
    state.check_finite()
    return _advance(state, clamp_catcher_action(catcher_action, env_cfg), env_cfg)


def catch_terms(state: WorldState, catcher_action, env_cfg: EnvConfig = DEFAULT_ENV) -> np.ndarray:
    """Unweighted catch terms, columns in reward order (two bonuses, goal, two penalties)."""
    out = np.empty((state.n, 5))
    _kernels.catch_components(
        state.obj_pos, state.palm_pos, state.grip,
        np.ascontiguousarray(np.array(catcher_action, dtype=np.float64, ndmin=2)),
        RADII[state.active_object], *env_cfg.goal, env_cfg.palm_radius, out,
    )
    return out


def _weighted_catch(terms: np.ndarray, w: RewardWeights) -> np.ndarray:
    return (w.w0 * terms[:, 0] + w.w1 * terms[:, 1] + w.w2 * terms[:, 2]
            - w.w3 * terms[:, 3] - w.w4 * terms[:, 4])


def reward_catch(state: WorldState, catcher_action, weights: RewardWeights = DEFAULT_WEIGHTS,
                 env_cfg: EnvConfig = DEFAULT_ENV):
    """Catch reward for the action as applied; returns ``(r_catch, RewardComponents)``."""
    terms = catch_terms(state, catcher_action, env_cfg)
    r_catch = _weighted_catch(terms, weights)
    zeros = np.zeros(state.n)
    comps = RewardComponents(
        terms[:, 0], terms[:, 1], terms[:, 2], terms[:, 3], terms[:, 4],
        zeros, zeros.copy(), r_catch, zeros.copy(), r_catch.copy(),
    )
    return r_catch, comps


def throw_terms(throw_velocity, v_action) -> tuple[np.ndarray, np.ndarray]:
    v = np.array(throw_velocity, dtype=np.float64, ndmin=2)
    a = np.array(v_action, dtype=np.float64, ndmin=2)
    speed = np.sqrt(v[:, 0] * v[:, 0] + v[:, 1] * v[:, 1]) + ANGULAR_VELOCITY_WEIGHT * np.abs(v[:, 2])
    return speed, np.sqrt(np.sum(a * a, axis=1))


def reward_throw(throw_velocity, v_action, weights: RewardWeights = DEFAULT_WEIGHTS):
    """Throw reward ``w5 * speed + w6 * |v_action|``; returns ``(r_throw, (speed, action_norm))``."""
    speed, action_norm = throw_terms(throw_velocity, v_action)
    return weights.w5 * speed + weights.w6 * action_norm, (speed, action_norm)


def blend_rewards(r_catch, r_throw, alpha: float):
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha * r_catch + (1.0 - alpha) * r_throw


def check_failure(state: WorldState, env_cfg: EnvConfig = DEFAULT_ENV) -> np.ndarray:
    """Object centre below table height + radius while not rising."""
    below = state.obj_pos[:, 1] < env_cfg.table_z + RADII[state.active_object]
    return below & (state.obj_vel[:, 1] <= 0.0)


def _wrap(angle: np.ndarray) -> np.ndarray:
    return np.arctan2(np.sin(angle), np.cos(angle))


def build_observations(state: WorldState, env_cfg: EnvConfig = DEFAULT_ENV) -> Observation:
    """Catcher layout: palm pos/vel (8), grips (2), object x/z/angle (3), object
    velocity (3), object-minus-palm vectors (4), object one-hot (15).
    The thrower sees the same plus a first-frame flag."""
    n = state.n
    cat = np.empty((n, CATCHER_OBS_DIM))
    for p in range(2):
        cat[:, 4 * p : 4 * p + 2] = state.palm_pos[:, p]
        cat[:, 4 * p + 2 : 4 * p + 4] = state.palm_vel[:, p]
    cat[:, 8:10] = state.grip
    cat[:, 10:12] = state.obj_pos
    cat[:, 12] = _wrap(state.obj_angle)
    cat[:, 13:15] = state.obj_vel
    cat[:, 15] = state.obj_angvel
    cat[:, 16:18] = state.obj_pos - state.palm_pos[:, 0]
    cat[:, 18:20] = state.obj_pos - state.palm_pos[:, 1]
    cat[:, 20:] = 0.0
    cat[np.arange(n), 20 + state.active_object] = 1.0
    thr = np.empty((n, THROWER_OBS_DIM))
    thr[:, :CATCHER_OBS_DIM] = cat
    thr[:, -1] = (state.t == 0).astype(np.float64)
    return Observation(cat, thr)


def global_state(state: WorldState, env_cfg: EnvConfig = DEFAULT_ENV) -> np.ndarray:
    """Flattened full state for the centralised critic."""
    n = state.n
    g = np.zeros((n, GLOBAL_STATE_DIM))
    g[:, 0:2] = state.obj_pos
    g[:, 2:4] = state.obj_vel
    g[:, 4] = np.sin(state.obj_angle)
    g[:, 5] = np.cos(state.obj_angle)
    g[:, 6] = state.obj_angvel
    g[:, 7:11] = state.palm_pos.reshape(n, 4)
    g[:, 11:15] = state.palm_vel.reshape(n, 4)
    g[:, 15:17] = state.grip
    g[:, 17] = state.t / env_cfg.horizon
    g[:, 18] = state.thrown
    g[np.arange(n), 19 + state.active_object] = 1.0
    return g


def step(state: WorldState, catcher_action, thrower_action, weights: RewardWeights,
         throw_cfg: ThrowConfig, rngs, env_cfg: EnvConfig = DEFAULT_ENV):
    """Advance all environments once.

    At ``t == 0`` the thrower action sets the object's launch velocity; later
    thrower actions are ignored. Returns ``(state, obs, r_total, components, done)``.
    """
    n = state.n
    state.check_finite()
    launched = state.copy()
    r_throw = np.zeros(n)
    speed = np.zeros(n)
    action_norm = np.zeros(n)
    first = np.flatnonzero(state.t == 0)
    if first.size:
        rngs = _rng_list(rngs, n)
        thrower_action = np.array(thrower_action, dtype=np.float64, ndmin=2)
        eps = np.stack([sample_throw_noise(rngs[i], throw_cfg) for i in first])
        v_action = clamp_thrower_action(thrower_action[first], throw_cfg)
        vel = compose_throw_velocity(throw_cfg, eps, v_action)
        launched.obj_vel[first] = vel[:, :2]
        launched.obj_angvel[first] = vel[:, 2]
        launched.thrown[first] = True
        r_throw[first], (speed[first], action_norm[first]) = reward_throw(vel, v_action, weights)

    applied = clamp_catcher_action(catcher_action, env_cfg)
    new = _advance(launched, applied, env_cfg)
    terms = catch_terms(new, applied, env_cfg)
    r_catch = _weighted_catch(terms, weights)
    r_total = blend_rewards(r_catch, r_throw, weights.alpha)
    comps = RewardComponents(
        terms[:, 0], terms[:, 1], terms[:, 2], terms[:, 3], terms[:, 4],
        speed, action_norm, r_catch, r_throw, r_total,
    )
    done = check_failure(new, env_cfg) | (new.t >= env_cfg.horizon)
    return new, build_observations(new, env_cfg), r_total, comps, done
