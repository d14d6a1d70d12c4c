"""Training loop: collect, estimate advantages, update actors then critic.

All randomness flows from named streams derived from the master seed, and
every stream's state is stored in each checkpoint, so a resumed run
continues exactly where the uninterrupted one would have.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from throwcatch.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from throwcatch.config import RunConfig
from throwcatch.errors import DivergenceError, NonFiniteError
from throwcatch.harl.agents import CATCHER, THROWER, Agent, Critic, make_agents
from throwcatch.harl.happo import happo_update, update_critic
from throwcatch.harl.rollout import RolloutBatch, VecEnv, collect_rollouts, finalize_batches
from throwcatch.harl.schedule import alpha_at
from throwcatch.metrics import append_metrics
from throwcatch.seeding import derive_seeds, restore_rng, rng_state

METRICS_FILE = "metrics.jsonl"
CHECKPOINT_DIR = "checkpoints"
DIAGNOSTIC_FILE = "diagnostic.json"


def checkpoint_name(iteration: int) -> str:
    return f"ckpt_{iteration:06d}.bin"


def episode_stats(batches: dict[str, RolloutBatch]) -> dict:
    cb = batches[CATCHER]
    n_ep = int(cb.episode_id.max()) + 1
    counts = np.bincount(cb.episode_id, minlength=n_ep)
    per_ep = lambda x: np.bincount(cb.episode_id, weights=x, minlength=n_ep)  # noqa: E731
    out = {
        "episodes": n_ep,
        "mean_r_total": float(per_ep(cb.rewards).mean()),
        "mean_r_catch": float(per_ep(cb.extras["r_catch"]).mean()),
        "mean_r_throw": float(per_ep(cb.extras["r_throw"]).mean()),
        "mean_episode_length": float(counts.mean()),
        "failure_rate": float(cb.extras["failed"].sum() / n_ep),
    }
    if THROWER in batches:
        v = batches[THROWER].extras["v_action"]
        out["thrower_mean_abs_v_action"] = float(np.linalg.norm(v, axis=1).mean())
    return out


@dataclass
class Trainer:
    cfg: RunConfig
    agents: dict[str, Agent]
    critic: Critic
    rngs: dict[str, np.random.Generator]
    iteration: int = 0
    output_dir: Path | None = None
    history: list[dict] = field(default_factory=list)

    @classmethod
    def fresh(cls, cfg: RunConfig, output_dir=None) -> "Trainer":
        agents, critic = make_agents(cfg)
        labels = ["sample:catcher", "sample:thrower", "minibatch", "order"]
        labels += [f"env:{i}" for i in range(cfg.envs_per_batch)]
        rngs = {label: derive_seeds(cfg.seed, label) for label in labels}
        return cls(cfg, agents, critic, rngs, 0, Path(output_dir) if output_dir else None)

    @classmethod
    def from_checkpoint(cls, cfg: RunConfig, cp: Checkpoint, output_dir=None) -> "Trainer":
        if cp.config_digest != cfg.digest():
            warnings.warn("resuming with a config that differs from the checkpoint's", stacklevel=2)
        rngs = {label: restore_rng(state) for label, state in cp.rng_states.items()}
        return cls(cfg, dict(cp.agents), cp.critic, rngs, cp.iteration, Path(output_dir) if output_dir else None)

    def snapshot(self) -> Checkpoint:
        return Checkpoint(
            iteration=self.iteration,
            config_digest=self.cfg.digest(),
            agents=dict(self.agents),
            critic=self.critic,
            rng_states={label: rng_state(r) for label, r in self.rngs.items()},
            config=self.cfg.to_dict(),
        )

    def save(self) -> Path | None:
        if self.output_dir is None:
            return None
        path = self.output_dir / CHECKPOINT_DIR / checkpoint_name(self.iteration)
        save_checkpoint(path, self.snapshot())
        return path

    def alpha(self) -> float:
        if self.cfg.mode == "sa":
            return 1.0
        return alpha_at(self.cfg.schedule, self.iteration, self.cfg.iterations)

    def step(self) -> dict:
        cfg = self.cfg
        t0 = time.perf_counter()
        alpha = self.alpha()
        venv = VecEnv([self.rngs[f"env:{i}"] for i in range(cfg.envs_per_batch)], cfg.env, cfg.throw, cfg.reward)
        sample = {CATCHER: self.rngs["sample:catcher"], THROWER: self.rngs["sample:thrower"]}
        batches = collect_rollouts(self.agents, self.critic, venv, cfg.steps_per_env, alpha, sample,
                                   cfg.actions, gamma=cfg.gae.gamma)
        finalize_batches(batches, cfg.gae)
        agents, stats, order = happo_update(self.agents, batches, cfg.ppo, self.rngs["minibatch"], self.rngs["order"])
        cb = batches[CATCHER]
        critic, value_loss = update_critic(self.critic, cb.global_states, cb.returns, cfg.ppo, self.rngs["minibatch"])
        self.agents, self.critic = agents, critic
        record = {"iteration": self.iteration, "wall_seconds": 0.0, "alpha": alpha}
        record.update(episode_stats(batches))
        for role, s in stats.items():
            record[f"{role}_policy_loss"] = s.policy_loss
            record[f"{role}_clip_fraction"] = s.clip_fraction
            record[f"{role}_approx_kl"] = s.approx_kl
        record["value_loss"] = value_loss
        record["agent_order"] = order
        self.iteration += 1
        record["wall_seconds"] = time.perf_counter() - t0
        return record

    def _diagnose(self, exc: Exception) -> None:
        if self.output_dir is None:
            return
        self.output_dir.mkdir(parents=True, exist_ok=True)
        info = {"iteration": self.iteration, "error": type(exc).__name__, "message": str(exc),
                "config_digest": self.cfg.digest()}
        (self.output_dir / DIAGNOSTIC_FILE).write_text(json.dumps(info, indent=2))

    def run(self, until: int | None = None) -> list[dict]:
        """Train up to iteration ``until`` (default: the configured count)."""
        until = self.cfg.iterations if until is None else until
        metrics_path = None
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            metrics_path = self.output_dir / METRICS_FILE
            if self.iteration == 0:
                metrics_path.write_text("")
                self.save()
        new = []
        while self.iteration < until:
            try:
                record = self.step()
                if metrics_path is not None:
                    append_metrics(metrics_path, record)
            except (NonFiniteError, DivergenceError, FloatingPointError) as exc:
                self._diagnose(exc)
                raise
            self.history.append(record)
            new.append(record)
            if self.iteration % self.cfg.checkpoint_every == 0 or self.iteration == until:
                self.save()
        return new


def train(cfg: RunConfig, output_dir=None, resume_from=None, until: int | None = None) -> Trainer:
    """Run (or resume) training and return the finished trainer."""
    if resume_from is not None:
        trainer = Trainer.from_checkpoint(cfg, load_checkpoint(resume_from), output_dir)
    else:
        trainer = Trainer.fresh(cfg, output_dir)
    trainer.run(until)
    return trainer
