"""Versioned binary checkpoints.

Layout: 8-byte magic, little-endian u32 format version, u64 header length,
a UTF-8 JSON header describing every array, then the arrays back to back as
little-endian float64. Writes go to a temporary file that is renamed into
place, so a reader never sees a half-written checkpoint.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from throwcatch.errors import CheckpointError
from throwcatch.harl.agents import Agent, Critic
from throwcatch.nn import NetworkSpec, OptimizerState

MAGIC = b"TCCKPT\x00\x01"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


@dataclass
class Checkpoint:
    iteration: int
    config_digest: str
    agents: dict[str, Agent]
    critic: Critic
    rng_states: dict = field(default_factory=dict)
    config: dict | None = None
    format_version: int = FORMAT_VERSION


def _opt_meta(opt: OptimizerState) -> dict:
    return {"step_count": opt.step_count, "learning_rate": opt.learning_rate, "beta1": opt.beta1,
            "beta2": opt.beta2, "eps_hat": opt.eps_hat}


def save_checkpoint(path, cp: Checkpoint) -> None:
    arrays: list[tuple[str, np.ndarray]] = []
    networks = {}
    for role, agent in cp.agents.items():
        networks[role] = {"spec": agent.spec.to_dict(), "opt": _opt_meta(agent.opt)}
        arrays += [(f"{role}/params", agent.params), (f"{role}/m", agent.opt.first_moment),
                   (f"{role}/v", agent.opt.second_moment)]
    networks["critic"] = {"spec": cp.critic.spec.to_dict(), "opt": _opt_meta(cp.critic.opt),
                          "value_scale": cp.critic.value_scale}
    arrays += [("critic/params", cp.critic.params), ("critic/m", cp.critic.opt.first_moment),
               ("critic/v", cp.critic.opt.second_moment)]
    header = {
        "iteration": cp.iteration,
        "config_digest": cp.config_digest,
        "agents": list(cp.agents),
        "networks": networks,
        "arrays": [[name, int(a.size)] for name, a in arrays],
        "rng_states": cp.rng_states,
        "config": cp.config,
    }
    blob = json.dumps(header).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(blob)))
            fh.write(blob)
            for _, a in arrays:
                fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path) -> Checkpoint:
    data = Path(path).read_bytes()
    if len(data) < _PREFIX.size:
        raise CheckpointError(f"{path}: truncated header")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    start = _PREFIX.size
    if len(data) < start + header_len:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(data[start : start + header_len].decode("utf-8"))
    except ValueError as exc:
        raise CheckpointError(f"{path}: corrupt header ({exc})") from None
    offset = start + header_len
    expected = offset + 8 * sum(n for _, n in header["arrays"])
    if len(data) != expected:
        raise CheckpointError(f"{path}: payload is {len(data) - offset} bytes, expected {expected - offset}")
    arrays = {}
    for name, n in header["arrays"]:
        arrays[name] = np.frombuffer(data, dtype="<f8", count=n, offset=offset).astype(np.float64)
        offset += 8 * n

    def opt_for(name: str) -> OptimizerState:
        return OptimizerState(arrays[f"{name}/m"], arrays[f"{name}/v"], **header["networks"][name]["opt"])

    agents = {
        role: Agent(role, NetworkSpec.from_dict(header["networks"][role]["spec"]), arrays[f"{role}/params"], opt_for(role))
        for role in header["agents"]
    }
    cnet = header["networks"]["critic"]
    critic = Critic(NetworkSpec.from_dict(cnet["spec"]), arrays["critic/params"], opt_for("critic"), cnet["value_scale"])
    return Checkpoint(header["iteration"], header["config_digest"], agents, critic, header["rng_states"],
                      header["config"], version)
