"""Diagonal-Gaussian policy head with a state-independent log-std."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from throwcatch.errors import DimensionError
from throwcatch.nn import autodiff as ad
from throwcatch.nn.network import GAUSSIAN, NetworkSpec, forward, forward_graph, log_std_slice

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class GaussianPolicyOutput:
    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.log_std = np.clip(np.asarray(self.log_std, dtype=np.float64), LOG_STD_MIN, LOG_STD_MAX)


def policy_output(spec: NetworkSpec, params: np.ndarray, obs) -> GaussianPolicyOutput:
    if spec.head != GAUSSIAN:
        raise ValueError("not a policy network")
    return GaussianPolicyOutput(forward(spec, params, obs), params[log_std_slice(spec)])


def policy_log_prob(out: GaussianPolicyOutput, action) -> np.ndarray:
    """Log-density summed over the last axis."""
    action = np.asarray(action, dtype=np.float64)
    if action.shape[-1] != out.mean.shape[-1]:
        raise DimensionError(f"action width {action.shape[-1]} != {out.mean.shape[-1]}")
    # same operation order as log_prob_graph so both paths agree bitwise
    z = (action - out.mean) * np.exp(-out.log_std)
    return np.sum((z * z) * -0.5 - out.log_std, axis=-1) - out.mean.shape[-1] * HALF_LOG_2PI


def policy_sample(out: GaussianPolicyOutput, rng: np.random.Generator):
    noise = rng.standard_normal(out.mean.shape)
    action = out.mean + np.exp(out.log_std) * noise
    return action, policy_log_prob(out, action)


def entropy(log_std: np.ndarray) -> float:
    return float(np.sum(log_std + 0.5 + HALF_LOG_2PI))


def log_prob_graph(spec: NetworkSpec, params: ad.Var, obs: np.ndarray, actions: np.ndarray):
    """Differentiable per-sample log-probs; returns ``(log_probs, log_std)`` graph nodes."""
    mean = forward_graph(spec, params, obs)
    sl = log_std_slice(spec)
    log_std = ad.clip(ad.take(params, sl.start, sl.stop, (spec.output_dim,)), LOG_STD_MIN, LOG_STD_MAX)
    z = (ad.as_var(actions) - mean) * ad.exp(-log_std)
    per_dim = ad.mul(ad.square(z), -0.5) - log_std
    return ad.sum(per_dim, axis=-1) - spec.output_dim * HALF_LOG_2PI, log_std
