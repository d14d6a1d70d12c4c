"""Adam with bias correction, plus global-norm gradient clipping."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from throwcatch.errors import NonFiniteError


@dataclass
class OptimizerState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    @classmethod
    def fresh(cls, n_params: int, **hyper) -> "OptimizerState":
        return cls(np.zeros(n_params), np.zeros(n_params), 0, **hyper)


def adam_step(params: np.ndarray, grads: np.ndarray, state: OptimizerState):
    if params.shape != grads.shape or grads.shape != state.first_moment.shape:
        raise ValueError("params, grads and optimizer moments must have equal length")
    if not np.all(np.isfinite(grads)):
        raise NonFiniteError("non-finite gradient")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps_hat)
    return new_params, replace(state, first_moment=m, second_moment=v, step_count=t)


def clip_grad_norm(grads: np.ndarray, max_norm: float) -> tuple[np.ndarray, float]:
    norm = float(np.sqrt(np.dot(grads, grads)))
    if max_norm > 0 and norm > max_norm:
        grads = grads * (max_norm / norm)
    return grads, norm
