"""Compound policy ratio and the clipped surrogate objective."""

from collections.abc import Sequence

import numpy as np

from throwcatch.errors import DimensionError, NonFiniteError
from throwcatch.nn import autodiff as ad


def compound_ratio(advantages, new_log_probs: Sequence = (), old_log_probs: Sequence = ()) -> np.ndarray:
    """Advantage weighted by the joint probability ratio of agents already updated this round.

    ``new_log_probs[j]`` and ``old_log_probs[j]`` are one earlier agent's
    log-probs on the shared samples. With no earlier agents the result is the
    advantage itself.
    """
    adv = np.asarray(advantages, dtype=np.float64)
    if len(new_log_probs) != len(old_log_probs):
        raise DimensionError("need matching new/old log-prob lists")
    if not new_log_probs:
        return adv.copy()
    log_ratio = np.zeros_like(adv)
    for new, old in zip(new_log_probs, old_log_probs):
        new, old = np.asarray(new), np.asarray(old)
        if new.shape != adv.shape or old.shape != adv.shape:
            raise DimensionError("log-probs and advantages must cover the same samples")
        log_ratio = log_ratio + (new - old)
    return np.exp(log_ratio) * adv


def ppo_clip_loss(log_probs_new, log_probs_old, m, clip_eps: float) -> float:
    """Negative mean clipped surrogate (minimising it maximises the objective)."""
    ratio = np.exp(np.asarray(log_probs_new, dtype=np.float64) - np.asarray(log_probs_old, dtype=np.float64))
    m = np.asarray(m, dtype=np.float64)
    surr = np.minimum(ratio * m, np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * m)
    loss = -float(np.mean(surr))
    if not np.isfinite(loss):
        raise NonFiniteError("non-finite surrogate loss")
    return loss


def ppo_clip_loss_graph(log_probs_new: ad.Var, log_probs_old, m, clip_eps: float) -> ad.Var:
    ratio = ad.exp(log_probs_new - np.asarray(log_probs_old))
    m = np.asarray(m, dtype=np.float64)
    surr = ad.minimum(ratio * m, ad.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * m)
    return -ad.mean(surr)
