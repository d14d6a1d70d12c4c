"""From-scratch dense networks, Gaussian policy heads, reverse-mode gradients and Adam."""

from throwcatch.nn.autodiff import Var, backward, grad
from throwcatch.nn.network import GAUSSIAN, VALUE, NetworkSpec, forward, forward_graph, init_params
from throwcatch.nn.optim import OptimizerState, adam_step, clip_grad_norm
from throwcatch.nn.policy import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    GaussianPolicyOutput,
    log_prob_graph,
    policy_log_prob,
    policy_output,
    policy_sample,
)


def elu(x):
    """Scalar or elementwise ELU: x for x >= 0, exp(x) - 1 otherwise."""
    import numpy as np

    from throwcatch.nn.network import _elu

    out = _elu(np.asarray(x, dtype=np.float64))
    return float(out) if out.ndim == 0 else out


__all__ = [
    "GAUSSIAN",
    "LOG_STD_MAX",
    "LOG_STD_MIN",
    "VALUE",
    "GaussianPolicyOutput",
    "NetworkSpec",
    "OptimizerState",
    "Var",
    "adam_step",
    "backward",
    "clip_grad_norm",
    "elu",
    "forward",
    "forward_graph",
    "grad",
    "init_params",
    "log_prob_graph",
    "policy_log_prob",
    "policy_output",
    "policy_sample",
]
