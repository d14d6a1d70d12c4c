"""Rollouts, sequential updates, agent ordering and the alpha schedule."""

from dataclasses import replace

import numpy as np
import pytest

from throwcatch.config import AlphaSchedule, RunConfig
from throwcatch.errors import DivergenceError
from throwcatch.harl import (
    CATCHER,
    THROWER,
    VecEnv,
    align_samples,
    alpha_at,
    collect_rollouts,
    compound_ratio,
    discounted_returns,
    draw_agent_order,
    finalize_batches,
    happo_update,
    make_agents,
    normalize_advantages,
    ppo_update,
    update_critic,
)
from throwcatch.harl.happo import policy_loss_and_grad
from throwcatch.nn import policy_log_prob, policy_output
from throwcatch.seeding import derive_seeds


def small_cfg(**kw):
    base = dict(mode="harl", seed=3, envs_per_batch=4, steps_per_env=30,
                actor={"hidden_widths": [16, 16]}, critic={"hidden_widths": [16, 16]})
    base.update(kw)
    return RunConfig.model_validate(base)


def rollout(cfg, alpha=0.7, seed_offset=0, agents=None):
    if agents is None:
        agents, critic = make_agents(cfg)
    else:
        agents, critic = agents
    venv = VecEnv([derive_seeds(cfg.seed + seed_offset, f"env:{i}") for i in range(cfg.envs_per_batch)],
                  cfg.env, cfg.throw, cfg.reward)
    rngs = {CATCHER: derive_seeds(cfg.seed, "sample:catcher"), THROWER: derive_seeds(cfg.seed, "sample:thrower")}
    batches = collect_rollouts(agents, critic, venv, cfg.steps_per_env, alpha, rngs, cfg.actions, cfg.gae.gamma)
    finalize_batches(batches, cfg.gae)
    return agents, critic, batches


def test_batch_sizes_one_env_one_episode():
    cfg = small_cfg(envs_per_batch=1, steps_per_env=10, env={"horizon": 10})
    _, _, b = rollout(cfg)
    assert len(b[CATCHER]) == 10 and len(b[THROWER]) == 1
    assert b[THROWER].step_index[0] == 0


def test_thrower_gets_one_transition_per_episode_with_discounted_return():
    cfg = small_cfg()
    _, _, b = rollout(cfg)
    cb, tb = b[CATCHER], b[THROWER]
    n_ep = len(np.unique(cb.episode_id))
    assert len(tb) == n_ep
    for k, ep in enumerate(tb.episode_id):
        r = cb.rewards[cb.episode_id == ep]
        assert tb.rewards[k] == pytest.approx(sum(0.99**i * x for i, x in enumerate(r)), rel=1e-12)
    assert np.array_equal(tb.rewards, discounted_returns(cb.rewards, cb.dones, 0.99)[cb.step_index == 0])


def test_every_episode_is_complete():
    cfg = small_cfg()
    _, _, b = rollout(cfg)
    cb = b[CATCHER]
    for ep in np.unique(cb.episode_id):
        rows = cb.episode_id == ep
        assert np.array_equal(cb.step_index[rows], np.arange(rows.sum()))
        assert cb.dones[rows][-1] == 1.0 and not cb.dones[rows][:-1].any()


def test_alpha_one_rewards_are_catch_rewards():
    _, _, b = rollout(small_cfg(), alpha=1.0)
    assert np.array_equal(b[CATCHER].rewards, b[CATCHER].extras["r_catch"])


def test_rollouts_deterministic():
    _, _, a = rollout(small_cfg())
    _, _, b = rollout(small_cfg())
    for role in (CATCHER, THROWER):
        assert np.array_equal(a[role].actions, b[role].actions)
        assert np.array_equal(a[role].rewards, b[role].rewards)


def test_log_probs_consistent_right_after_collection():
    agents, _, b = rollout(small_cfg())
    for role in (CATCHER, THROWER):
        spec, params = agents[role].spec, agents[role].params
        new = policy_log_prob(policy_output(spec, params, b[role].obs), b[role].actions)
        assert np.max(np.abs(np.exp(new - b[role].old_log_probs) - 1.0)) <= 1e-12


def test_align_samples_joins_on_episode_and_step():
    _, _, b = rollout(small_cfg())
    cb, tb = b[CATCHER], b[THROWER]
    values = np.arange(len(tb), dtype=float) + 1.0
    aligned = align_samples(cb, tb, values)
    first = cb.step_index == 0
    assert np.array_equal(aligned[first], values)
    assert not aligned[~first].any()
    back = align_samples(tb, cb, cb.rewards)
    assert np.array_equal(back, cb.rewards[first])


def test_single_agent_happo_equals_ppo():
    cfg = small_cfg(mode="sa")
    agents, _, b = rollout(cfg, alpha=1.0)
    a_happo, _, order = happo_update(agents, b, cfg.ppo, np.random.default_rng(5))
    a_ppo, _ = ppo_update(agents[CATCHER], b[CATCHER], cfg.ppo, np.random.default_rng(5))
    assert order == [CATCHER]
    assert np.array_equal(a_happo[CATCHER].params, a_ppo.params)
    assert np.array_equal(a_happo[CATCHER].opt.second_moment, a_ppo.opt.second_moment)


def test_zero_advantages_leave_policies_unchanged():
    cfg = small_cfg()
    agents, _, b = rollout(cfg)
    for batch in b.values():
        batch.advantages = np.zeros(len(batch))
    updated, _, _ = happo_update(agents, b, cfg.ppo, np.random.default_rng(0), np.random.default_rng(1))
    for role in agents:
        assert np.array_equal(updated[role].params, agents[role].params)


def test_second_agent_sees_first_agents_ratio_only_on_shared_samples():
    cfg = small_cfg()
    agents, _, b = rollout(cfg)
    order_rng = np.random.default_rng(0)
    while True:  # find a seed where the thrower goes first
        state = order_rng.bit_generator.state
        if draw_agent_order(order_rng, agents)[0] == THROWER:
            order_rng.bit_generator.state = state
            break
    updated, _, order = happo_update(agents, b, cfg.ppo, np.random.default_rng(2), order_rng)
    assert order == [THROWER, CATCHER]
    tb, cb = b[THROWER], b[CATCHER]
    new_t = policy_log_prob(policy_output(updated[THROWER].spec, updated[THROWER].params, tb.obs), tb.actions)
    m = compound_ratio(normalize_advantages(cb.advantages), [align_samples(cb, tb, new_t)],
                       [align_samples(cb, tb, tb.old_log_probs)])
    adv = normalize_advantages(cb.advantages)
    first = cb.step_index == 0
    assert np.array_equal(m[~first], adv[~first])
    assert not np.allclose(m[first], adv[first])


def test_catcher_gradient_same_in_sa_and_harl_when_thrower_unchanged():
    cfg = small_cfg()
    agents, _, b = rollout(cfg, alpha=1.0)
    cb, tb = b[CATCHER], b[THROWER]
    adv = normalize_advantages(cb.advantages)
    m_harl = compound_ratio(adv, [align_samples(cb, tb, tb.old_log_probs)], [align_samples(cb, tb, tb.old_log_probs)])
    _, g_sa, _ = policy_loss_and_grad(agents[CATCHER], cb.obs, cb.actions, cb.old_log_probs, adv, cfg.ppo)
    _, g_ha, _ = policy_loss_and_grad(agents[CATCHER], cb.obs, cb.actions, cb.old_log_probs, m_harl, cfg.ppo)
    assert np.array_equal(g_sa, g_ha)


def test_order_reproducible_and_balanced():
    roles = [CATCHER, THROWER]
    a = [draw_agent_order(derive_seeds(1, "order"), roles) for _ in range(3)]
    assert a[0] == a[1] == a[2]
    rng = derive_seeds(1, "order")
    firsts = [draw_agent_order(rng, roles)[0] == CATCHER for _ in range(10_000)]
    assert abs(np.mean(firsts) - 0.5) <= 0.02
    seqs = {s: [tuple(draw_agent_order(r, roles)) for _ in range(20)]
            for s, r in ((1, derive_seeds(1, "order")), (2, derive_seeds(2, "order")))}
    assert seqs[1] != seqs[2]


def test_divergence_guard():
    cfg = small_cfg()
    agents, _, b = rollout(cfg)
    ppo = cfg.ppo.model_copy(update={"kl_abort": 1e-9, "learning_rate": 0.05})
    big = {role: replace(a, opt=replace(a.opt, learning_rate=0.05)) for role, a in agents.items()}
    with pytest.raises(DivergenceError):
        happo_update(big, b, ppo, np.random.default_rng(0), np.random.default_rng(0))


def test_critic_regression_reduces_loss():
    cfg = small_cfg()
    _, critic, b = rollout(cfg)
    cb = b[CATCHER]
    losses = []
    for _ in range(15):
        critic, loss = update_critic(critic, cb.global_states, cb.returns, cfg.ppo, np.random.default_rng(0))
        losses.append(loss)
    assert losses[-1] < losses[0]


def test_alpha_schedule():
    fixed = AlphaSchedule(mode="fixed", alpha_start=0.7, alpha_end=0.7)
    assert all(alpha_at(fixed, i, 100) == 0.7 for i in (0, 13, 100, 500))
    decay = AlphaSchedule(mode="decay", alpha_start=1.0, alpha_end=0.7, total_iters=100)
    assert alpha_at(decay, 0) == 1.0
    assert alpha_at(decay, 50) == pytest.approx(0.85, abs=1e-15)
    assert alpha_at(decay, 100) == pytest.approx(0.7, abs=1e-15)
    assert alpha_at(decay, 250) == pytest.approx(0.7, abs=1e-15)
    with pytest.raises(ValueError):
        AlphaSchedule(mode="fixed", alpha_start=1.0, alpha_end=0.7)
