"""Heterogeneous-agent PPO trainer."""

from throwcatch.harl.agents import CATCHER, THROWER, Agent, Critic, make_agents
from throwcatch.harl.gae import compute_gae, discounted_returns, normalize_advantages
from throwcatch.harl.happo import align_samples, draw_agent_order, happo_update, ppo_update, update_critic
from throwcatch.harl.losses import compound_ratio, ppo_clip_loss
from throwcatch.harl.rollout import RolloutBatch, VecEnv, collect_rollouts, finalize_batches
from throwcatch.harl.schedule import alpha_at

__all__ = [
    "CATCHER", "THROWER", "Agent", "Critic", "make_agents", "compute_gae", "discounted_returns",
    "normalize_advantages", "align_samples", "draw_agent_order", "happo_update", "ppo_update",
    "update_critic", "compound_ratio", "ppo_clip_loss", "RolloutBatch", "VecEnv", "collect_rollouts",
    "finalize_batches", "alpha_at",
]
