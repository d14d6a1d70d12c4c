"""Sequential heterogeneous-agent PPO updates.

Agents are updated one after another in a freshly drawn random order. Each
agent's surrogate is weighted by the probability ratio that the agents
updated before it induce on the shared samples.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from throwcatch.config import PpoConfig
from throwcatch.errors import DivergenceError, NonFiniteError
from throwcatch.harl.agents import Agent, Critic
from throwcatch.harl.gae import normalize_advantages
from throwcatch.harl.losses import compound_ratio, ppo_clip_loss_graph
from throwcatch.harl.rollout import RolloutBatch
from throwcatch.nn import Var, adam_step, clip_grad_norm, forward_graph, grad, log_prob_graph, policy_log_prob, policy_output
from throwcatch.nn import autodiff as ad


@dataclass
class AgentStats:
    policy_loss: float
    clip_fraction: float
    approx_kl: float


def draw_agent_order(rng: np.random.Generator, roles) -> list[str]:
    roles = list(roles)
    return [roles[i] for i in rng.permutation(len(roles))]


def align_samples(target: RolloutBatch, source: RolloutBatch, source_values: np.ndarray) -> np.ndarray:
    """Carry per-sample values of another agent onto ``target``'s samples.

    Samples are joined on (episode, step). Where the source agent took no
    action (the thrower after the first frame) the result is 0, so aligned
    new and old log-probs there contribute a unit ratio.
    """
    width = int(max(target.step_index.max(initial=0), source.step_index.max(initial=0))) + 1
    tkey = target.episode_id * width + target.step_index
    skey = source.episode_id * width + source.step_index
    order = np.argsort(skey, kind="stable")
    pos = np.searchsorted(skey[order], tkey)
    pos = np.minimum(pos, max(skey.size - 1, 0))
    out = np.zeros(tkey.shape)
    if skey.size:
        hit = skey[order][pos] == tkey
        out[hit] = source_values[order][pos[hit]]
    return out


def policy_loss_and_grad(agent: Agent, obs, actions, old_log_probs, m, cfg: PpoConfig):
    params = Var(agent.params)
    log_probs, log_std = log_prob_graph(agent.spec, params, obs, actions)
    loss = ppo_clip_loss_graph(log_probs, old_log_probs, m, cfg.clip_eps)
    if cfg.entropy_coef:
        loss = loss - cfg.entropy_coef * ad.sum(log_std)
    g = grad(loss, params)
    return float(loss.value), g, log_probs.value


def _update_actor(agent: Agent, batch: RolloutBatch, m: np.ndarray, cfg: PpoConfig,
                  rng: np.random.Generator) -> tuple[Agent, AgentStats]:
    n = len(batch)
    losses, clipped = [], []
    for _ in range(cfg.epochs_per_update):
        perm = rng.permutation(n)
        for mb in np.array_split(perm, min(cfg.minibatches, n)):
            loss, g, lp = policy_loss_and_grad(agent, batch.obs[mb], batch.actions[mb],
                                               batch.old_log_probs[mb], m[mb], cfg)
            if not np.isfinite(loss):
                raise NonFiniteError(f"{agent.role}: non-finite policy loss")
            g, _ = clip_grad_norm(g, cfg.max_grad_norm)
            params, opt = adam_step(agent.params, g, agent.opt)
            agent = replace(agent, params=params, opt=opt)
            losses.append(loss)
            clipped.append(np.mean(np.abs(np.exp(lp - batch.old_log_probs[mb]) - 1.0) > cfg.clip_eps))
    new_lp = policy_log_prob(policy_output(agent.spec, agent.params, batch.obs), batch.actions)
    approx_kl = float(np.mean(batch.old_log_probs - new_lp))
    return agent, AgentStats(float(np.mean(losses)), float(np.mean(clipped)), approx_kl)


def ppo_update(agent: Agent, batch: RolloutBatch, cfg: PpoConfig, rng: np.random.Generator):
    """Plain PPO on one agent's batch (normalised advantages as the surrogate weight)."""
    return _update_actor(agent, batch, normalize_advantages(batch.advantages), cfg, rng)


def happo_update(agents: dict[str, Agent], batches: dict[str, RolloutBatch], cfg: PpoConfig,
                 rng: np.random.Generator, order_rng: np.random.Generator | None = None):
    """Update every actor in turn; returns ``(agents, stats, order)``.

    ``order_rng`` draws the agent order (fixed insertion order when omitted);
    ``rng`` shuffles minibatches.
    """
    order = draw_agent_order(order_rng, agents) if order_rng is not None and len(agents) > 1 else list(agents)
    new_log_probs: dict[str, np.ndarray] = {}
    updated = dict(agents)
    stats = {}
    for role in order:
        batch = batches[role]
        adv = normalize_advantages(batch.advantages)
        m = compound_ratio(
            adv,
            [align_samples(batch, batches[r], lp) for r, lp in new_log_probs.items()],
            [align_samples(batch, batches[r], batches[r].old_log_probs) for r in new_log_probs],
        )
        updated[role], stats[role] = _update_actor(updated[role], batch, m, cfg, rng)
        if stats[role].approx_kl > cfg.kl_abort:
            raise DivergenceError(f"{role}: approx KL {stats[role].approx_kl:.3f} > {cfg.kl_abort}")
        new_log_probs[role] = policy_log_prob(
            policy_output(updated[role].spec, updated[role].params, batch.obs), batch.actions
        )
    return updated, stats, order


def update_critic(critic: Critic, global_states: np.ndarray, returns: np.ndarray, cfg: PpoConfig,
                  rng: np.random.Generator) -> tuple[Critic, float]:
    """Squared-error regression of the (scaled) critic output onto the returns."""
    n = returns.shape[0]
    targets = (returns / critic.value_scale)[:, None]
    losses = []
    for _ in range(cfg.epochs_per_update):
        perm = rng.permutation(n)
        for mb in np.array_split(perm, min(cfg.minibatches, n)):
            params = Var(critic.params)
            v = forward_graph(critic.spec, params, global_states[mb])
            loss = cfg.value_coef * ad.mean(ad.square(v - targets[mb]))
            g, _ = clip_grad_norm(grad(loss, params), cfg.max_grad_norm)
            new_params, opt = adam_step(critic.params, g, critic.opt)
            critic = replace(critic, params=new_params, opt=opt)
            losses.append(float(loss.value))
    return critic, float(np.mean(losses))
