"""Lock-step rollout collection over a batch of environments.

Every environment plays whole episodes until it has taken at least
``steps_per_env`` steps, so no episode straddles two iterations and the
thrower's single transition per episode always has a complete return.
Samples are ordered environment-major, then by time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from throwcatch.config import ActionConfig, EnvConfig, GaeConfig, RewardWeights, ThrowConfig
from throwcatch.env import WorldState, build_observations, clamp_thrower_action, global_state, reset_envs, step
from throwcatch.harl.agents import CATCHER, THROWER, Agent, Critic, catcher_env_action, thrower_env_action
from throwcatch.harl.gae import compute_gae, discounted_returns
from throwcatch.nn import policy_log_prob, policy_output, policy_sample


@dataclass
class RolloutBatch:
    obs: np.ndarray
    actions: np.ndarray
    old_log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    episode_id: np.ndarray
    step_index: np.ndarray
    global_states: np.ndarray
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.rewards.shape[0]


class VecEnv:
    """A batch of independent environments, each with its own random stream."""

    def __init__(self, rngs, env_cfg: EnvConfig, throw_cfg: ThrowConfig, weights: RewardWeights):
        self.rngs = list(rngs)
        self.env_cfg = env_cfg
        self.throw_cfg = throw_cfg
        self.weights = weights
        self.state = WorldState.zeros(len(self.rngs))

    @property
    def n(self) -> int:
        return len(self.rngs)

    def reset(self, idx=None) -> None:
        reset_envs(self.state, range(self.n) if idx is None else idx, self.rngs, self.throw_cfg, self.env_cfg)


def _env_major(stacked: np.ndarray, mask: np.ndarray) -> np.ndarray:
    # (T, n, ...) -> rows where mask, ordered by env then time
    return np.swapaxes(stacked, 0, 1)[mask.T]


def collect_rollouts(agents: dict[str, Agent], critic: Critic, venv: VecEnv, steps_per_env: int,
                     alpha: float, rngs: dict[str, np.random.Generator], action_cfg: ActionConfig,
                     gamma: float = 0.99, deterministic: bool = False) -> dict[str, RolloutBatch]:
    """Roll out the current joint policy; returns one batch per agent.

    ``rngs`` maps each agent role to its sampling stream. Without a thrower
    agent the throw is the scripted base throw (zero thrower action). The
    thrower's reward is the ``gamma``-discounted return of its episode.
    """
    n = venv.n
    weights = venv.weights.model_copy(update={"alpha": alpha})
    venv.reset()
    catcher = agents[CATCHER]
    thrower = agents.get(THROWER)

    steps = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    episode_local = np.zeros(n, dtype=np.int64)
    rec = {k: [] for k in ("mask", "obs", "act", "logp", "r_total", "r_catch", "r_throw", "done",
                           "failed", "gs", "value", "t", "ep", "t_obs", "t_act", "t_logp", "v_action")}
    while active.any():
        state = venv.state
        obs = build_observations(state, venv.env_cfg)
        gs = global_state(state, venv.env_cfg)
        out = policy_output(catcher.spec, catcher.params, obs.catcher)
        if deterministic:
            raw_c = out.mean
            lp_c = policy_log_prob(out, raw_c)
        else:
            raw_c, lp_c = policy_sample(out, rngs[CATCHER])

        first = state.t == 0
        raw_t = np.zeros((n, 3))
        lp_t = np.zeros(n)
        if thrower is not None and first.any():
            rows = np.flatnonzero(first)
            t_out = policy_output(thrower.spec, thrower.params, obs.thrower[rows])
            raw_t[rows], lp_t[rows] = policy_sample(t_out, rngs[THROWER])
        v_action = thrower_env_action(raw_t, action_cfg) if thrower is not None else np.zeros((n, 3))

        values = critic.values(gs)
        new_state, _, r_total, comps, done = step(
            state, catcher_env_action(raw_c, action_cfg), v_action, weights, venv.throw_cfg,
            venv.rngs, venv.env_cfg,
        )
        failed = done & (new_state.t < venv.env_cfg.horizon)
        venv.state = new_state

        for key, value in (("mask", active.copy()), ("obs", obs.catcher), ("act", raw_c), ("logp", lp_c),
                           ("r_total", r_total), ("r_catch", comps.r_catch), ("r_throw", comps.r_throw),
                           ("done", done), ("failed", failed), ("gs", gs), ("value", values),
                           ("t", state.t.copy()), ("ep", episode_local.copy()), ("t_obs", obs.thrower),
                           ("t_act", raw_t), ("t_logp", lp_t), ("v_action", v_action)):
            rec[key].append(value)

        steps += active
        finished = np.flatnonzero(done & active)
        for i in finished:
            if steps[i] >= steps_per_env:
                active[i] = False
            else:
                episode_local[i] += 1
                venv.reset([i])

    mask = np.stack(rec["mask"])
    flat = {k: _env_major(np.stack(v), mask) for k, v in rec.items() if k != "mask"}
    episodes_per_env = episode_local + 1
    offsets = np.concatenate([[0], np.cumsum(episodes_per_env)[:-1]])
    env_of_row = _env_major(np.broadcast_to(np.arange(n), mask.shape), mask)
    episode_id = offsets[env_of_row] + flat["ep"]
    dones = flat["done"].astype(np.float64)

    catcher_batch = RolloutBatch(
        obs=flat["obs"], actions=flat["act"], old_log_probs=flat["logp"], rewards=flat["r_total"],
        values=flat["value"], dones=dones, episode_id=episode_id, step_index=flat["t"],
        global_states=flat["gs"],
        extras={"r_catch": flat["r_catch"], "r_throw": flat["r_throw"], "failed": flat["failed"]},
    )
    batches = {CATCHER: catcher_batch}
    if thrower is not None:
        first_rows = flat["t"] == 0
        episode_return = discounted_returns(catcher_batch.rewards, dones, gamma)[first_rows]
        batches[THROWER] = RolloutBatch(
            obs=flat["t_obs"][first_rows], actions=flat["t_act"][first_rows],
            old_log_probs=flat["t_logp"][first_rows], rewards=episode_return,
            values=flat["value"][first_rows], dones=np.ones(int(first_rows.sum())),
            episode_id=episode_id[first_rows], step_index=np.zeros(int(first_rows.sum()), dtype=np.int64),
            global_states=flat["gs"][first_rows],
            extras={"v_action": clamp_thrower_action(flat["v_action"][first_rows], venv.throw_cfg)},
        )
    return batches


def finalize_batches(batches: dict[str, RolloutBatch], gae_cfg: GaeConfig) -> None:
    """Fill advantages and returns in place.

    The catcher gets GAE over its per-step rewards. The thrower's one-step
    episodes make its advantage the episode return minus the critic's value at
    the throw frame.
    """
    cb = batches[CATCHER]
    cb.advantages, cb.returns = compute_gae(cb.rewards, np.append(cb.values, 0.0), cb.dones, gae_cfg)
    if THROWER in batches:
        tb = batches[THROWER]
        tb.advantages, tb.returns = compute_gae(tb.rewards, np.append(tb.values, 0.0), tb.dones, gae_cfg)
