"""Evaluation protocol: scripted throws, deterministic catcher, box statistics and sweeps.

The thrower is replaced by the base throw with zero action and the noise
half-width multiplied by ``noise_scale``. Each episode ``k`` draws from its
own stream ``eval:{k}``, so results do not depend on how episodes are
batched.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from throwcatch.checkpoint import load_checkpoint
from throwcatch.config import RunConfig, config_from_dict
from throwcatch.env import CATCHER_ACTION_DIM, CATCHER_OBS_DIM, N_OBJECTS, WorldState, build_observations, reset_envs, step
from throwcatch.env.objects import NAMES
from throwcatch.errors import DimensionError
from throwcatch.harl.agents import CATCHER, Agent, catcher_env_action
from throwcatch.nn import forward
from throwcatch.seeding import derive_seeds

EPISODE_COLUMNS = ("episode", "object_id", "reward", "steps", "failed")
SUMMARY_COLUMNS = ("method", "alpha", "scale", "n", "mean", "median", "q25", "q75",
                   "whisker_low", "whisker_high", "outlier_count")
ALPHA_LABELS = ("1.0", "0.9", "0.8", "0.7", "0.6", "0.5", "decay")
NOISE_METHODS = ("SA", "HA-fixed", "HA-decay")
NOISE_SCALES = (1.0, 1.2, 1.5)


@dataclass(frozen=True)
class EvalConfig:
    episodes: int = 1000
    noise_scale: float = 1.0
    seed: int = 0
    per_object: bool = False
    chunk: int = 100

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.noise_scale <= 0:
            raise ValueError("noise_scale must be positive")


@dataclass
class EvalResult:
    rewards: np.ndarray
    object_ids: np.ndarray
    steps: np.ndarray
    failed: np.ndarray
    per_object: "PerObjectReport | None" = None


@dataclass(frozen=True)
class EvalSummary:
    n: int
    mean: float
    median: float
    q25: float
    q75: float
    whisker_low: float
    whisker_high: float
    outlier_count: int


@dataclass
class PerObjectReport:
    mean_reward: np.ndarray  # nan where an object never came up
    counts: np.ndarray


def per_object_report(rewards, object_ids) -> PerObjectReport:
    counts = np.bincount(object_ids, minlength=N_OBJECTS)
    sums = np.bincount(object_ids, weights=rewards, minlength=N_OBJECTS)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return PerObjectReport(means, counts)


def run_eval(catcher: Agent, cfg: EvalConfig, run_cfg: RunConfig | None = None) -> EvalResult:
    """Cumulative undiscounted catch reward per episode; failure ends an episode early."""
    if catcher.spec.input_dim != CATCHER_OBS_DIM or catcher.spec.output_dim != CATCHER_ACTION_DIM:
        raise DimensionError(
            f"catcher network maps {catcher.spec.input_dim} -> {catcher.spec.output_dim}, "
            f"environment needs {CATCHER_OBS_DIM} -> {CATCHER_ACTION_DIM}"
        )
    run_cfg = run_cfg or RunConfig()
    throw_cfg = run_cfg.throw.model_copy(update={"noise_scale": cfg.noise_scale})
    weights = run_cfg.reward.model_copy(update={"alpha": 1.0})
    env_cfg = run_cfg.env
    rewards = np.zeros(cfg.episodes)
    steps = np.zeros(cfg.episodes, dtype=np.int64)
    failed = np.zeros(cfg.episodes, dtype=bool)
    object_ids = np.zeros(cfg.episodes, dtype=np.int64)
    for start in range(0, cfg.episodes, cfg.chunk):
        ks = range(start, min(start + cfg.chunk, cfg.episodes))
        n = len(ks)
        rngs = [derive_seeds(cfg.seed, f"eval:{k}") for k in ks]
        state = WorldState.zeros(n)
        reset_envs(state, range(n), rngs, throw_cfg, env_cfg)
        object_ids[start : start + n] = state.active_object
        alive = np.ones(n, dtype=bool)
        total = np.zeros(n)
        count = np.zeros(n, dtype=np.int64)
        fail = np.zeros(n, dtype=bool)
        obs = build_observations(state, env_cfg)
        zeros = np.zeros((n, 3))
        while alive.any():
            mean = forward(catcher.spec, catcher.params, obs.catcher)[:, :CATCHER_ACTION_DIM]
            state, obs, _, comps, done = step(state, catcher_env_action(mean, run_cfg.actions), zeros,
                                              weights, throw_cfg, rngs, env_cfg)
            total += np.where(alive, comps.r_catch, 0.0)
            count += alive
            fail |= alive & done & (state.t < env_cfg.horizon)
            alive &= ~done
        rewards[start : start + n] = total
        steps[start : start + n] = count
        failed[start : start + n] = fail
    report = per_object_report(rewards, object_ids) if cfg.per_object else None
    return EvalResult(rewards, object_ids, steps, failed, report)


def _quantile(sorted_x: np.ndarray, q: float) -> float:
    pos = q * (sorted_x.size - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, sorted_x.size - 1)
    frac = pos - lo
    return float(sorted_x[lo] + (sorted_x[hi] - sorted_x[lo]) * frac)


def summarize_box_stats(samples) -> EvalSummary:
    """Mean, linear-interpolation quartiles and 1.5 IQR whiskers.

    A whisker reaches the most extreme sample inside its fence, but never
    retreats inside the box: when no sample lies between the quartile and the
    fence it sits on the quartile (the usual box-plot convention).
    """
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if x.size == 0:
        raise ValueError("need at least one sample")
    q25, median, q75 = _quantile(x, 0.25), _quantile(x, 0.5), _quantile(x, 0.75)
    iqr = q75 - q25
    lo_fence, hi_fence = q25 - 1.5 * iqr, q75 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    return EvalSummary(
        n=int(x.size),
        mean=float(np.mean(x)),
        median=median,
        q25=q25,
        q75=q75,
        whisker_low=min(float(inside[0]), q25),
        whisker_high=max(float(inside[-1]), q75),
        outlier_count=int(x.size - inside.size),
    )


@dataclass
class SweepRow:
    method: str
    alpha: str
    scale: float
    summary: EvalSummary | None
    result: EvalResult | None

    @property
    def label(self) -> str:
        return f"{self.method}_alpha-{self.alpha}_scale-{self.scale:g}"


def load_catcher(path) -> tuple[Agent, RunConfig]:
    cp = load_checkpoint(path)
    run_cfg = config_from_dict(cp.config) if cp.config is not None else RunConfig()
    return cp.agents[CATCHER], run_cfg


def _eval_row(method, alpha, scale, path, cfg: EvalConfig) -> SweepRow:
    if path is None or not Path(path).exists():
        return SweepRow(method, alpha, scale, None, None)
    catcher, run_cfg = load_catcher(path)
    result = run_eval(catcher, EvalConfig(cfg.episodes, scale, cfg.seed, cfg.per_object, cfg.chunk), run_cfg)
    return SweepRow(method, alpha, scale, summarize_box_stats(result.rewards), result)


def sweep_alpha(checkpoints: dict, cfg: EvalConfig, labels=ALPHA_LABELS) -> list[SweepRow]:
    """One row per alpha label in declared order; missing checkpoints give absent rows."""
    return [_eval_row("HA", label, cfg.noise_scale, checkpoints.get(label), cfg) for label in labels]


def sweep_noise(checkpoints: dict, cfg: EvalConfig, scales=NOISE_SCALES) -> list[SweepRow]:
    """One row per (method, scale) pair."""
    return [_eval_row(m, "", s, checkpoints.get(m), cfg) for m in NOISE_METHODS for s in scales]


def write_episodes_csv(path, result: EvalResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EPISODE_COLUMNS)
        for k in range(result.rewards.size):
            w.writerow([k, int(result.object_ids[k]), repr(float(result.rewards[k])), int(result.steps[k]),
                        int(result.failed[k])])


def read_episodes_csv(path) -> EvalResult:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return EvalResult(
        rewards=np.array([float(r["reward"]) for r in rows]),
        object_ids=np.array([int(r["object_id"]) for r in rows], dtype=np.int64),
        steps=np.array([int(r["steps"]) for r in rows], dtype=np.int64),
        failed=np.array([r["failed"] == "1" for r in rows]),
    )


def summary_row(method: str, alpha: str, scale: float, s: EvalSummary | None) -> list:
    if s is None:
        return [method, alpha, f"{scale:g}", 0] + [""] * 7
    return [method, alpha, f"{scale:g}", s.n, repr(s.mean), repr(s.median), repr(s.q25), repr(s.q75),
            repr(s.whisker_low), repr(s.whisker_high), s.outlier_count]


def write_summary_csv(path, rows: list[SweepRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow(summary_row(row.method, row.alpha, row.scale, row.summary))


def write_sweep(out_dir, rows: list[SweepRow], name: str) -> Path:
    """Summary table plus one per-episode dump per present row."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for row in rows:
        if row.result is not None:
            write_episodes_csv(out / f"episodes_{row.label}.csv", row.result)
    path = out / f"{name}.csv"
    write_summary_csv(path, rows)
    return path


def write_per_object_csv(path, report: PerObjectReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("object_id", "name", "episodes", "mean_reward"))
        for i in range(N_OBJECTS):
            mean = "" if report.counts[i] == 0 else repr(float(report.mean_reward[i]))
            w.writerow([i, NAMES[i], int(report.counts[i]), mean])
