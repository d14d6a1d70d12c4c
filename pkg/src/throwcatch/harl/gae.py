"""Generalised advantage estimation."""

import numpy as np

from throwcatch import _kernels
from throwcatch.config import GaeConfig
from throwcatch.errors import DimensionError


def compute_gae(rewards, values, dones, cfg: GaeConfig = GaeConfig()):
    """Advantages and returns; ``values`` holds one bootstrap value past the last step.

    delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t, and
    A_t = delta_t + gamma * lam * (1 - done_t) * A_{t+1}.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if values.shape != (rewards.size + 1,) or dones.shape != rewards.shape:
        raise DimensionError(
            f"need len(values) == len(rewards) + 1 == len(dones) + 1, got "
            f"{values.shape}, {rewards.shape}, {dones.shape}"
        )
    adv = _kernels.gae(rewards, values, dones, cfg.gamma, cfg.lam)
    return adv, adv + values[:-1]


def discounted_returns(rewards, dones, gamma: float) -> np.ndarray:
    """Discounted reward-to-go, restarting after every done flag."""
    rewards = np.asarray(rewards, dtype=np.float64)
    return _kernels.gae(rewards, np.zeros(rewards.size + 1), dones, gamma, 1.0)


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    adv = np.asarray(adv, dtype=np.float64)
    if adv.size < 2:
        return adv - adv.mean() if adv.size else adv
    centred = adv - adv.mean()
    return centred / (centred.std() + 1e-12)
