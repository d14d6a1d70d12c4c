"""Dense (optionally D2RL) ELU networks stored as one flat parameter vector.

Layout, layer by layer: weight matrix of shape (out, in) in row-major order,
then its bias. Gaussian-policy networks append one state-independent
log-std entry per action dimension after the last layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from throwcatch.errors import DimensionError
from throwcatch.nn import autodiff as ad

GAUSSIAN = "gaussian"
VALUE = "value"

HIDDEN_GAIN = 1.0
POLICY_HEAD_GAIN = 0.01
VALUE_HEAD_GAIN = 1.0


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    hidden_widths: tuple[int, ...]
    output_dim: int
    activation: str = "elu"
    d2rl: bool = True
    head: str = GAUSSIAN
    layers: tuple[tuple[int, int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1 or self.output_dim < 1 or any(w < 1 for w in self.hidden_widths):
            raise ValueError("all widths must be >= 1")
        if self.d2rl and not self.hidden_widths:
            raise ValueError("d2rl needs at least one hidden layer")
        if self.activation != "elu":
            raise ValueError(f"unsupported activation {self.activation!r}")
        if self.head not in (GAUSSIAN, VALUE):
            raise ValueError(f"unknown head {self.head!r}")
        shapes = []
        fan_in = self.input_dim
        for k, width in enumerate(self.hidden_widths):
            if k > 0 and self.d2rl:
                fan_in += self.input_dim
            shapes.append((width, fan_in))
            fan_in = width
        shapes.append((self.output_dim, fan_in))
        object.__setattr__(self, "layers", tuple(shapes))

    @property
    def n_log_std(self) -> int:
        return self.output_dim if self.head == GAUSSIAN else 0

    @property
    def param_count(self) -> int:
        return sum(o * i + o for o, i in self.layers) + self.n_log_std

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_widths": list(self.hidden_widths),
            "output_dim": self.output_dim,
            "activation": self.activation,
            "d2rl": self.d2rl,
            "head": self.head,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(**d)


def _slices(spec: NetworkSpec):
    offset = 0
    for out_dim, in_dim in spec.layers:
        w_end = offset + out_dim * in_dim
        yield (offset, w_end, (out_dim, in_dim)), (w_end, w_end + out_dim)
        offset = w_end + out_dim


def unpack(spec: NetworkSpec, params: np.ndarray):
    """Per-layer ``(W, b)`` views into ``params``."""
    return [
        (params[w0:w1].reshape(shape), params[b0:b1])
        for (w0, w1, shape), (b0, b1) in _slices(spec)
    ]


def log_std_slice(spec: NetworkSpec) -> slice:
    n = spec.param_count
    return slice(n - spec.n_log_std, n)


def _check(spec: NetworkSpec, params: np.ndarray, x: np.ndarray) -> None:
    if params.ndim != 1 or params.size != spec.param_count:
        raise DimensionError(f"expected {spec.param_count} parameters, got {params.size}")
    if x.shape[-1] != spec.input_dim:
        raise DimensionError(f"expected input width {spec.input_dim}, got {x.shape[-1]}")


def _elu(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0.0, x, np.expm1(np.minimum(x, 0.0)))


def forward(spec: NetworkSpec, params: np.ndarray, x) -> np.ndarray:
    """Network output for a single input vector or a batch of rows."""
    params = np.asarray(params, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    _check(spec, params, x)
    single = x.ndim == 1
    inp = x[None, :] if single else x
    h = inp
    layers = unpack(spec, params)
    for k, (w, b) in enumerate(layers[:-1]):
        if k > 0 and spec.d2rl:
            h = np.concatenate([h, inp], axis=-1)
        h = _elu(h @ w.T + b)
    w, b = layers[-1]
    out = h @ w.T + b
    return out[0] if single else out


def forward_graph(spec: NetworkSpec, params: ad.Var, x: np.ndarray) -> ad.Var:
    """Same arithmetic as :func:`forward` on a batch, recorded for differentiation."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    _check(spec, params.value, x)
    h = ad.Var(x)
    n_layers = len(spec.layers)
    for k, ((w0, w1, shape), (b0, b1)) in enumerate(_slices(spec)):
        if spec.d2rl and 0 < k < n_layers - 1:
            h = ad.concat([h, x])
        w = ad.take(params, w0, w1, shape)
        b = ad.take(params, b0, b1, (shape[0],))
        h = h @ ad.transpose(w) + b
        if k < n_layers - 1:
            h = ad.elu(h)
    return h


def _orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> np.ndarray:
    head_gain = POLICY_HEAD_GAIN if spec.head == GAUSSIAN else VALUE_HEAD_GAIN
    chunks = []
    for k, (out_dim, in_dim) in enumerate(spec.layers):
        gain = head_gain if k == len(spec.layers) - 1 else HIDDEN_GAIN
        chunks.append(_orthogonal(rng, out_dim, in_dim, gain).ravel())
        chunks.append(np.zeros(out_dim))
    chunks.append(np.zeros(spec.n_log_std))
    return np.concatenate(chunks)
