"""Advantage estimation, compound ratio and the clipped surrogate."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from throwcatch.config import GaeConfig
from throwcatch.errors import DimensionError, NonFiniteError
from throwcatch.harl import compound_ratio, compute_gae, discounted_returns, normalize_advantages, ppo_clip_loss
from throwcatch.harl.losses import ppo_clip_loss_graph
from throwcatch.nn import Var, grad


def brute_force_gae(r, v, d, gamma, lam):
    n = len(r)
    delta = [r[t] + gamma * v[t + 1] * (1 - d[t]) - v[t] for t in range(n)]
    adv = []
    for t in range(n):
        total, coef = 0.0, 1.0
        for k in range(t, n):
            total += coef * delta[k]
            if d[k]:
                break
            coef *= gamma * lam
        adv.append(total)
    return np.array(adv)


def test_gae_single_step_zero_values():
    adv, ret = compute_gae([2.5], [0.0, 0.0], [1.0])
    assert adv[0] == 2.5 and ret[0] == 2.5


def test_gae_lambda_zero_is_td_residual(rng):
    r, v = rng.standard_normal(20), rng.standard_normal(21)
    d = (rng.random(20) < 0.2).astype(float)
    adv, _ = compute_gae(r, v, d, GaeConfig(gamma=0.9, lam=0.0))
    assert np.array_equal(adv, r + 0.9 * v[1:] * (1 - d) - v[:-1])


def test_gae_matches_double_loop(rng):
    cfg = GaeConfig()
    for _ in range(100):
        r, v = rng.standard_normal(50), rng.standard_normal(51)
        d = (rng.random(50) < 0.1).astype(float)
        adv, ret = compute_gae(r, v, d, cfg)
        assert np.max(np.abs(adv - brute_force_gae(r, v, d, cfg.gamma, cfg.lam))) <= 1e-10
        assert np.array_equal(ret, adv + v[:-1])


def test_gae_length_mismatch():
    with pytest.raises(DimensionError):
        compute_gae(np.zeros(5), np.zeros(5), np.zeros(5))


def test_discounted_returns_restart_at_done():
    ret = discounted_returns([1.0, 1.0, 1.0, 1.0], [0.0, 1.0, 0.0, 1.0], 0.5)
    assert np.array_equal(ret, [1.5, 1.0, 1.5, 1.0])


@settings(max_examples=60)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=200))
def test_normalized_advantages_moments(xs):
    x = np.array(xs)
    if np.ptp(x) < 1e-6:
        return
    z = normalize_advantages(x)
    assert abs(z.mean()) <= 1e-10
    assert abs(z.std() - 1.0) <= 1e-6


# --- compound ratio -----------------------------------------------------------------


def test_first_agent_ratio_is_advantage():
    adv = np.array([0.3, -1.1, 2.0])
    m = compound_ratio(adv)
    assert np.array_equal(m, adv) and m is not adv


def test_unchanged_agent_gives_unit_ratio():
    adv = np.array([0.3, -1.1, 2.0])
    lp = np.array([-1.0, -2.0, -0.5])
    assert np.array_equal(compound_ratio(adv, [lp], [lp]), adv)


def test_compound_ratio_two_prior_agents_scalar_oracle():
    adv = [0.5, -1.25, 2.0]
    new = [[-1.0, -0.7, -2.2], [-0.3, -0.9, -1.5]]
    old = [[-1.1, -0.6, -2.0], [-0.35, -0.8, -1.9]]
    m = compound_ratio(np.array(adv), [np.array(x) for x in new], [np.array(x) for x in old])
    for i in range(3):
        ref = math.exp((new[0][i] - old[0][i]) + (new[1][i] - old[1][i])) * adv[i]
        assert abs(m[i] - ref) <= 1e-12


def test_compound_ratio_mismatch():
    with pytest.raises(DimensionError):
        compound_ratio(np.zeros(3), [np.zeros(2)], [np.zeros(2)])
    with pytest.raises(DimensionError):
        compound_ratio(np.zeros(3), [np.zeros(3)], [])


# --- clipped surrogate --------------------------------------------------------------

EPS = 0.2


def _loss(rho, m):
    return ppo_clip_loss(np.array([math.log(rho)]), np.array([0.0]), np.array([m]), EPS)


def test_identity_ratio():
    m = np.array([0.5, -2.0, 1.5])
    assert ppo_clip_loss(np.zeros(3), np.zeros(3), m, EPS) == -np.mean(m)


def test_clip_branch_table():
    # (rho, M, which term the min picks)
    table = [
        (1.0 + 2 * EPS, 1.0, "clipped"),  # positive advantage, ratio above the band
        (1.0 - 2 * EPS, 1.0, "raw"),  # positive advantage, ratio below the band
        (1.0 + 2 * EPS, -1.0, "raw"),  # negative advantage, ratio above the band
        (1.0 - 2 * EPS, -1.0, "clipped"),  # negative advantage, ratio below the band
    ]
    for rho, m, branch in table:
        r = math.exp(math.log(rho))
        clipped = min(max(r, 1 - EPS), 1 + EPS)
        expected = -(clipped * m) if branch == "clipped" else -(r * m)
        assert _loss(rho, m) == expected
    assert _loss(1 + 2 * EPS, 1.0) == -(1 + EPS)
    assert _loss(1 - 2 * EPS, -1.0) == pytest.approx(1 - EPS, abs=1e-15)


@settings(max_examples=100)
@given(st.floats(-3, 3), st.floats(-5, 5))
def test_surrogate_bounded_by_clip(log_ratio, m):
    loss = ppo_clip_loss(np.array([log_ratio]), np.array([0.0]), np.array([m]), EPS)
    assert -loss <= (1 + EPS) * abs(m) + 1e-12


def test_surrogate_nan_rejected():
    with pytest.raises(NonFiniteError):
        ppo_clip_loss(np.array([np.nan]), np.zeros(1), np.ones(1), EPS)


def test_graph_loss_matches_numpy_and_zero_advantage_has_zero_grad(rng):
    new, old, m = rng.normal(0, 0.3, 8), rng.normal(0, 0.3, 8), rng.standard_normal(8)
    v = Var(new)
    loss = ppo_clip_loss_graph(v, old, m, EPS)
    assert loss.value == ppo_clip_loss(new, old, m, EPS)
    v0 = Var(new)
    assert not grad(ppo_clip_loss_graph(v0, old, np.zeros(8), EPS), v0).any()
