"""Episode transcripts as line-delimited JSON: one record per step."""

from __future__ import annotations

import json
from dataclasses import fields

import numpy as np

from throwcatch.config import EnvConfig, RewardWeights, ThrowConfig
from throwcatch.env.core import WorldState, reset, step


def _state_record(state: WorldState) -> dict:
    return {f.name: getattr(state, f.name)[0].tolist() for f in fields(state)}


def episode_transcript(rng: np.random.Generator, catcher_policy, thrower_action=(0.0, 0.0, 0.0),
                       weights: RewardWeights = RewardWeights(), throw_cfg: ThrowConfig = ThrowConfig(),
                       env_cfg: EnvConfig = EnvConfig()) -> list[dict]:
    """Play one episode; ``catcher_policy`` maps a catcher observation row to an action."""
    state, obs = reset([rng], throw_cfg, env_cfg)
    records = []
    done = False
    while not done:
        action = np.asarray(catcher_policy(obs.catcher[0]), dtype=np.float64)
        t = int(state.t[0])
        state, obs, _, comps, d = step(state, action, np.asarray(thrower_action, dtype=np.float64),
                                       weights, throw_cfg, [rng], env_cfg)
        done = bool(d[0])
        records.append({"t": t, "state": _state_record(state), "action": action.tolist(),
                        "reward": comps.row(0), "done": done})
    return records


def write_transcript(path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def read_transcript(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
