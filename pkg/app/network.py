"""Small fully-connected networks with hand-written reverse mode and Adam.

Parameters live in one flat float64 vector; layer weights and biases are
views into it, so optimizer and target updates work on the whole vector at
once.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import ConfigError, ContractError

logger = logging.getLogger('smfg-lab.network')

HIDDEN_ACTIVATIONS = ('tanh', 'relu')
OUTPUT_ACTIVATIONS = ('identity', 'tanh', 'sigmoid')
FD_DENOMINATOR_FLOOR = 1e-8


@dataclass(frozen=True)
class NetworkSpec:
    layer_sizes: Tuple[int, ...]
    hidden_activation: str = 'tanh'
    output_activation: str = 'identity'

    def __post_init__(self):
        object.__setattr__(self, 'layer_sizes', tuple(int(s) for s in self.layer_sizes))
        if len(self.layer_sizes) < 2:
            raise ConfigError(f"Network needs at least 2 layer sizes, got {self.layer_sizes}")
        if any(s <= 0 for s in self.layer_sizes):
            raise ConfigError(f"Layer sizes must be positive, got {self.layer_sizes}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigError(f"Unknown hidden activation: {self.hidden_activation}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigError(f"Unknown output activation: {self.output_activation}")

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    @property
    def layer_shapes(self) -> List[Tuple[int, int]]:
        """(out, in) weight shape per layer."""
        return [(n_out, n_in) for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:])]

    @property
    def n_params(self) -> int:
        return sum(o * i + o for o, i in self.layer_shapes)

    def to_dict(self) -> Dict:
        return {
            'layer_sizes': list(self.layer_sizes),
            'hidden_activation': self.hidden_activation,
            'output_activation': self.output_activation,
        }

    @classmethod
    def from_dict(cls, values: Dict) -> 'NetworkSpec':
        return cls(
            tuple(values['layer_sizes']),
            values.get('hidden_activation', 'tanh'),
            values.get('output_activation', 'identity'),
        )


def _layer_views(spec: NetworkSpec, flat: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    views = []
    offset = 0
    for n_out, n_in in spec.layer_shapes:
        W = flat[offset:offset + n_out * n_in].reshape(n_out, n_in)
        offset += n_out * n_in
        b = flat[offset:offset + n_out]
        offset += n_out
        views.append((W, b))
    return views


class NetworkParams:
    """Weights and biases of one network, stored as a flat vector."""

    def __init__(self, spec: NetworkSpec, flat: Optional[np.ndarray] = None):
        self.spec = spec
        if flat is None:
            flat = np.zeros(spec.n_params)
        flat = np.array(flat, dtype=np.float64)
        if flat.shape != (spec.n_params,):
            raise ContractError(
                f"Parameter vector has shape {flat.shape}, spec needs ({spec.n_params},)")
        self.flat = flat

    @property
    def layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return _layer_views(self.spec, self.flat)

    def copy(self) -> 'NetworkParams':
        return NetworkParams(self.spec, self.flat.copy())

    def digest(self) -> str:
        return hashlib.sha256(self.flat.astype('<f8').tobytes()).hexdigest()

    def named_arrays(self, prefix: str) -> Dict[str, np.ndarray]:
        arrays = {}
        for k, (W, b) in enumerate(self.layers):
            arrays[f"{prefix}.W{k}"] = W.copy()
            arrays[f"{prefix}.b{k}"] = b.copy()
        return arrays

    @classmethod
    def from_named_arrays(cls, spec: NetworkSpec, arrays: Dict[str, np.ndarray], prefix: str) -> 'NetworkParams':
        params = cls(spec)
        for k, (W, b) in enumerate(params.layers):
            for name, view in ((f"{prefix}.W{k}", W), (f"{prefix}.b{k}", b)):
                if name not in arrays:
                    raise ContractError(f"Missing array {name}")
                if arrays[name].shape != view.shape:
                    raise ContractError(
                        f"Array {name} has shape {arrays[name].shape}, spec needs {view.shape}")
                view[...] = arrays[name]
        return params

    def __repr__(self):
        return f"NetworkParams(layers={list(self.spec.layer_sizes)}, digest={self.digest()[:8]})"


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-5

    @classmethod
    def zeros_like(cls, params: NetworkParams, **hyper) -> 'AdamState':
        return cls(np.zeros_like(params.flat), np.zeros_like(params.flat), **hyper)

    def copy(self) -> 'AdamState':
        return AdamState(self.m.copy(), self.v.copy(), self.step, self.beta1, self.beta2, self.eps)


def net_init(spec: NetworkSpec, seed) -> NetworkParams:
    """Xavier-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    params = NetworkParams(spec)
    for W, _ in params.layers:
        n_out, n_in = W.shape
        limit = np.sqrt(6.0 / (n_in + n_out))
        W[...] = rng.uniform(-limit, limit, size=W.shape)
    return params


def _activate(z: np.ndarray, name: str) -> np.ndarray:
    if name == 'tanh':
        return np.tanh(z)
    if name == 'relu':
        return np.maximum(z, 0.0)
    if name == 'sigmoid':
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    return z


def _activation_grad(z: np.ndarray, y: np.ndarray, name: str) -> np.ndarray:
    if name == 'tanh':
        return 1.0 - y * y
    if name == 'relu':
        return (z > 0).astype(float)
    if name == 'sigmoid':
        return y * (1.0 - y)
    return np.ones_like(z)


def _as_batch(params: NetworkParams, x) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = np.atleast_2d(x)
    if batch.ndim != 2 or batch.shape[1] != params.spec.input_size:
        raise ContractError(
            f"Input has shape {x.shape}, network expects {params.spec.input_size} features")
    return batch, single


def _forward_pass(params: NetworkParams, batch: np.ndarray):
    return _propagate(params.spec, params.layers, batch)


def _propagate(spec: NetworkSpec, layers, batch: np.ndarray):
    pre_activations = []
    outputs = [batch]
    h = batch
    for k, (W, b) in enumerate(layers):
        z = h @ W.T + b
        act = spec.output_activation if k == len(layers) - 1 else spec.hidden_activation
        h = _activate(z, act)
        pre_activations.append(z)
        outputs.append(h)
    return pre_activations, outputs


def net_forward(params: NetworkParams, x) -> np.ndarray:
    """Evaluate the network on one input vector or a batch of rows."""
    batch, single = _as_batch(params, x)
    _, outputs = _forward_pass(params, batch)
    return outputs[-1][0] if single else outputs[-1]


def net_gradients(params: NetworkParams, x, upstream) -> Tuple[np.ndarray, np.ndarray]:
    """Reverse-mode gradients of <upstream, output>.

    For a batch, the parameter gradient is summed over rows and the input
    gradient is returned per row.

    Args:
        params: Network parameters
        x: Input vector or (B, in) batch
        upstream: Vector or (B, out) batch of output cotangents

    Returns:
        (flat parameter gradient, input gradient with the shape of x)
    """
    batch, single = _as_batch(params, x)
    upstream = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    if upstream.shape != (batch.shape[0], params.spec.output_size):
        raise ContractError(
            f"Upstream has shape {upstream.shape}, expected ({batch.shape[0]}, {params.spec.output_size})")

    spec = params.spec
    layers = params.layers
    pre_activations, outputs = _forward_pass(params, batch)

    grad = np.zeros_like(params.flat)
    grad_views = _layer_views(spec, grad)

    last = len(layers) - 1
    delta = upstream * _activation_grad(pre_activations[last], outputs[last + 1], spec.output_activation)
    input_grad = None
    for k in range(last, -1, -1):
        W, _ = layers[k]
        gW, gb = grad_views[k]
        gW[...] = delta.T @ outputs[k]
        gb[...] = delta.sum(axis=0)
        back = delta @ W
        if k > 0:
            delta = back * _activation_grad(pre_activations[k - 1], outputs[k], spec.hidden_activation)
        else:
            input_grad = back
    return grad, (input_grad[0] if single else input_grad)


def adam_step(params: NetworkParams, grads, state: AdamState, lr: float,
              maximize: bool = False) -> Tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update; returns new params and state.

    Coordinates with an exactly zero gradient are left where they are; their
    moments still decay.
    """
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.flat.shape or state.m.shape != params.flat.shape:
        raise ContractError(
            f"Gradient shape {grads.shape} / moment shape {state.m.shape} "
            f"do not match parameters {params.flat.shape}")
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1 ** step)
    v_hat = v / (1.0 - state.beta2 ** step)
    update = lr * m_hat / (np.sqrt(v_hat) + state.eps)
    update[grads == 0.0] = 0.0
    flat = params.flat + update if maximize else params.flat - update
    new_state = AdamState(m, v, step, state.beta1, state.beta2, state.eps)
    return NetworkParams(params.spec, flat), new_state


def soft_update(target: NetworkParams, online: NetworkParams, tau: float) -> NetworkParams:
    """Blend online into target: tau * online + (1 - tau) * target."""
    if target.spec.layer_sizes != online.spec.layer_sizes:
        raise ContractError(
            f"Target {target.spec.layer_sizes} and online {online.spec.layer_sizes} differ")
    if not 0.0 <= tau <= 1.0:
        raise ContractError(f"tau must lie in [0, 1], got {tau}")
    blended = tau * online.flat + (1.0 - tau) * target.flat
    # rounding can step a hair outside the segment
    low = np.minimum(target.flat, online.flat)
    high = np.maximum(target.flat, online.flat)
    return NetworkParams(target.spec, np.clip(blended, low, high))


def fd_gradcheck(params: NetworkParams, x, upstream,
                 gradient_fn: Optional[Callable] = None, h: float = 1e-6) -> float:
    """Worst relative error of analytic gradients against central differences.

    The perturbed objectives are evaluated in extended precision so that the
    difference quotient stays accurate for gradients near the 1e-8 floor.

    Args:
        params: Network to check
        x: Input vector
        upstream: Output cotangent
        gradient_fn: Gradient implementation under test, net_gradients by default
        h: Finite-difference step

    Returns:
        max |a - n| / max(|a|, |n|, 1e-8) over every parameter and input coordinate
    """
    gradient_fn = gradient_fn or net_gradients
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    analytic_params, analytic_input = gradient_fn(params, x, upstream)

    spec = params.spec
    weights = upstream.astype(np.longdouble)

    def objective(flat: np.ndarray, inp: np.ndarray) -> np.longdouble:
        _, outputs = _propagate(spec, _layer_views(spec, flat), inp.reshape(1, -1))
        return np.sum(weights * outputs[-1][0])

    flat = params.flat.astype(np.longdouble)
    inp = x.astype(np.longdouble)
    step = np.longdouble(h)

    numeric_params = np.zeros(flat.size)
    for j in range(flat.size):
        original = flat[j]
        flat[j] = original + step
        plus = objective(flat, inp)
        flat[j] = original - step
        minus = objective(flat, inp)
        flat[j] = original
        numeric_params[j] = float((plus - minus) / (2 * step))

    numeric_input = np.zeros(inp.size)
    for j in range(inp.size):
        original = inp.flat[j]
        inp.flat[j] = original + step
        plus = objective(flat, inp)
        inp.flat[j] = original - step
        minus = objective(flat, inp)
        inp.flat[j] = original
        numeric_input[j] = float((plus - minus) / (2 * step))

    analytic = np.concatenate([np.ravel(analytic_params), np.ravel(analytic_input)])
    numeric = np.concatenate([numeric_params, numeric_input])
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), FD_DENOMINATOR_FLOOR)
    return float(np.max(np.abs(analytic - numeric) / denom))
