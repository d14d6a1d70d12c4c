"""Quick self-checks runnable from the command line (``throwcatch verify``).

Each check compares a library routine against a small independent
computation and returns ``(name, passed, detail)``.
"""

from __future__ import annotations

import numpy as np

from throwcatch.config import EnvConfig, GaeConfig, RewardWeights, ThrowConfig
from throwcatch.env import WorldState, physics_step, reset, step
from throwcatch.evaluation import summarize_box_stats
from throwcatch.harl.gae import compute_gae
from throwcatch.harl.losses import compound_ratio, ppo_clip_loss, ppo_clip_loss_graph
from throwcatch.nn import GAUSSIAN, VALUE, NetworkSpec, Var, forward_graph, grad, init_params, log_prob_graph
from throwcatch.nn import autodiff as ad


def _surrogate_value_loss(actor, critic, pa, pc, obs, act, old, adv, gs, ret, eps):
    lp, _ = log_prob_graph(actor, pa, obs, act)
    v = forward_graph(critic, pc, gs)
    return ppo_clip_loss_graph(lp, old, adv, eps) + 0.5 * ad.mean(ad.square(v - ret[:, None]))


def check_gradients(seeds=range(3), h=1e-5) -> tuple[str, bool, str]:
    worst = 0.0
    for seed in seeds:
        rng = np.random.default_rng(seed)
        actor = NetworkSpec(7, (16, 16), 3, head=GAUSSIAN)
        critic = NetworkSpec(5, (16, 16), 1, head=VALUE)
        pa0 = init_params(actor, rng) + 0.1 * rng.standard_normal(actor.param_count)
        pc0 = init_params(critic, rng)
        obs, act, gs = rng.standard_normal((12, 7)), rng.standard_normal((12, 3)), rng.standard_normal((12, 5))
        adv, ret = rng.standard_normal(12), rng.standard_normal(12)
        pa, pc = Var(pa0), Var(pc0)
        old = log_prob_graph(actor, pa, obs, act)[0].value + 0.05 * rng.standard_normal(12)
        loss = _surrogate_value_loss(actor, critic, pa, pc, obs, act, old, adv, gs, ret, 0.2)
        ad.backward(loss)
        analytic = np.concatenate([pa.grad, pc.grad])
        flat = np.concatenate([pa0, pc0])
        numeric = np.empty_like(flat)
        for i in range(flat.size):
            vals = []
            for sign in (1.0, -1.0):
                x = flat.copy()
                x[i] += sign * h
                vals.append(_surrogate_value_loss(actor, critic, Var(x[: pa0.size]), Var(x[pa0.size :]),
                                                  obs, act, old, adv, gs, ret, 0.2).value)
            numeric[i] = (vals[0] - vals[1]) / (2 * h)
        err = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
        worst = max(worst, float(err))
    return "gradients vs finite differences", worst <= 1e-4, f"max relative error {worst:.2e}"


def check_gae(trials=20) -> tuple[str, bool, str]:
    cfg = GaeConfig()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(trials):
        r, v = rng.standard_normal(50), rng.standard_normal(51)
        d = (rng.random(50) < 0.1).astype(float)
        adv, _ = compute_gae(r, v, d, cfg)
        delta = r + cfg.gamma * v[1:] * (1 - d) - v[:-1]
        ref = np.zeros(50)
        for t in range(50):
            coef = 1.0
            for k in range(t, 50):
                ref[t] += coef * delta[k]
                if d[k]:
                    break
                coef *= cfg.gamma * cfg.lam
        worst = max(worst, float(np.max(np.abs(adv - ref))))
    return "advantage recursion vs double loop", worst <= 1e-10, f"max abs error {worst:.1e}"


def check_clip_table() -> tuple[str, bool, str]:
    eps = 0.2
    # (ratio, M, expected surrogate)
    table = [(1.4, 1.0, 1.2), (0.6, 1.0, 0.6), (1.4, -1.0, -1.4), (0.6, -1.0, -0.8)]
    ok = all(abs(ppo_clip_loss([np.log(r)], [0.0], [m], eps) + s) < 1e-12 for r, m, s in table)
    first = compound_ratio(np.array([0.3, -1.2]))
    ok = ok and np.array_equal(first, [0.3, -1.2])
    return "clip branches and first-agent ratio", bool(ok), "4 branches"


def check_free_flight() -> tuple[str, bool, str]:
    env = EnvConfig()
    state = WorldState.zeros(1)
    state.obj_pos[0] = (0.0, 50.0)
    state.obj_vel[0] = (3.0, 4.0)
    state.palm_pos[0] = ((100.0, 0.0), (100.0, 1.0))
    z0, vz0, dt, g = 50.0, 4.0, env.dt, env.gravity
    worst = 0.0
    drift_ok = True
    for n in range(1, 121):
        state = physics_step(state, np.zeros(6), env)
        discrete = z0 + n * dt * vz0 - g * dt * dt * n * (n + 1) / 2
        t = n * dt
        worst = max(worst, abs(state.obj_pos[0, 1] - discrete))
        drift_ok &= abs(state.obj_pos[0, 1] - (z0 + vz0 * t - 0.5 * g * t * t)) <= g * t * dt / 2 + 1e-9
    return "free flight", worst <= 1e-12 and bool(drift_ok), f"max deviation {worst:.1e}"


def check_blend_and_locality() -> tuple[str, bool, str]:
    weights, throw = RewardWeights(), ThrowConfig()
    ok = True
    for alpha in (0.0, 1.0):
        w = weights.model_copy(update={"alpha": alpha})
        state, _ = reset([np.random.default_rng(3)], throw)
        _, _, r_total, comps, _ = step(state, np.zeros(6), np.zeros(3), w, throw, [np.random.default_rng(4)])
        ok &= bool(np.array_equal(r_total, comps.r_catch if alpha == 1.0 else comps.r_throw))
    trajectories = []
    for k in range(2):
        rng = np.random.default_rng(5)
        state, _ = reset([rng], throw)
        act_rng = np.random.default_rng(6)
        traj = []
        for t in range(30):
            thrower = np.zeros(3) if t == 0 or k == 0 else act_rng.standard_normal(3)
            state, _, _, _, _ = step(state, np.full(6, 0.1), thrower, weights, throw, [rng])
            traj.append(state.obj_pos.copy())
        trajectories.append(np.stack(traj))
    ok &= bool(np.array_equal(trajectories[0], trajectories[1]))
    return "reward blend and thrower locality", ok, "exact"


def check_box_stats() -> tuple[str, bool, str]:
    rng = np.random.default_rng(0)
    ok = True
    for _ in range(50):
        x = rng.standard_normal(rng.integers(1, 40))
        s = summarize_box_stats(x)
        q25, med, q75 = np.percentile(x, [25, 50, 75])
        ok &= bool(np.isclose(s.q25, q25) and np.isclose(s.median, med) and np.isclose(s.q75, q75))
        ok &= s.whisker_low <= s.q25 <= s.median <= s.q75 <= s.whisker_high
    return "box statistics", ok, "50 random sets"


CHECKS = (check_gradients, check_gae, check_clip_table, check_free_flight, check_blend_and_locality, check_box_stats)


def run_checks() -> list[tuple[str, bool, str]]:
    return [check() for check in CHECKS]
