# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_network is internal and cannot be imported directly.")

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.exceptions.numeric_failure_exception import NumericFailureException
from survival_ranker.domain.models.network import Activation, Architecture, NetworkState

BN_EPSILON = 1e-5
# keeps s2 strictly inside (0, 1) so log(s2) and log(1 - s2) stay finite
S2_EPSILON = 1e-12


@dataclass
class LayerCache:
    inputs: np.ndarray
    pre_activation: np.ndarray
    activated: np.ndarray
    normalized: np.ndarray | None = None
    inv_std: np.ndarray | None = None
    batch_statistics: bool = False
    dropout_mask: np.ndarray | None = None


@dataclass
class ForwardCache:
    """Intermediate values of one forward pass, consumed by `backward`."""

    batch_size: int
    layers: list[LayerCache]
    bottleneck_input: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    batch_moments: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)


def initialize_network(architecture: Architecture, seed: int | np.random.SeedSequence = 0) -> NetworkState:
    """Glorot-uniform weights, zero biases, identity batch-norm."""
    rng = np.random.default_rng(seed)

    def glorot(fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    parameters: dict[str, np.ndarray] = {}
    buffers: dict[str, np.ndarray] = {}
    fan_in = architecture.input_dim
    for k, layer in enumerate(architecture.hidden_layers):
        parameters[f"hidden{k}.weight"] = glorot(fan_in, layer.width)
        parameters[f"hidden{k}.bias"] = np.zeros(layer.width)
        if layer.batch_norm:
            parameters[f"hidden{k}.gamma"] = np.ones(layer.width)
            parameters[f"hidden{k}.beta"] = np.zeros(layer.width)
            buffers[f"hidden{k}.running_mean"] = np.zeros(layer.width)
            buffers[f"hidden{k}.running_var"] = np.ones(layer.width)
        fan_in = layer.width
    parameters["bottleneck.weight"] = glorot(fan_in, 1)
    parameters["bottleneck.bias"] = np.zeros(1)
    parameters["head.weight"] = glorot(1, architecture.horizon_T)
    parameters["head.bias"] = np.zeros(architecture.horizon_T)
    return NetworkState(architecture=architecture, parameters=parameters, buffers=buffers, training=False)


def _activate(kind: Activation, values: np.ndarray) -> np.ndarray:
    if kind == Activation.RELU:
        return np.maximum(values, 0.0)
    if kind == Activation.TANH:
        return np.tanh(values)
    return values


def _activation_slope(kind: Activation, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
    if kind == Activation.RELU:
        return (pre > 0).astype(np.float64)
    if kind == Activation.TANH:
        return 1.0 - post ** 2
    return np.ones_like(pre)


def forward(
    state: NetworkState,
    batch,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray, ForwardCache]:
    """
    :param batch: (batch, input_dim) features.
    :param train_mode: sample dropout masks from `rng` and normalize with batch statistics;
                       otherwise use running statistics and no dropout.
    :return: s1 (batch,), s2 (batch, horizon_T) in (0, 1), and the cache for `backward`.
    """
    architecture = state.architecture
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != architecture.input_dim:
        raise InvalidInputException(f"batch shape {batch.shape} does not match input_dim {architecture.input_dim}")
    if train_mode and rng is None:
        rng = np.random.default_rng(0)

    params = state.parameters
    caches: list[LayerCache] = []
    moments: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    hidden = batch
    for k, layer in enumerate(architecture.hidden_layers):
        z = hidden @ params[f"hidden{k}.weight"] + params[f"hidden{k}.bias"]
        cache = LayerCache(inputs=hidden, pre_activation=z, activated=z)
        if layer.batch_norm:
            if train_mode:
                mean, var = z.mean(axis=0), z.var(axis=0)
                moments[f"hidden{k}"] = (mean, var)
                cache.batch_statistics = True
            else:
                mean, var = state.buffers[f"hidden{k}.running_mean"], state.buffers[f"hidden{k}.running_var"]
            cache.inv_std = 1.0 / np.sqrt(var + BN_EPSILON)
            cache.normalized = (z - mean) * cache.inv_std
            cache.pre_activation = params[f"hidden{k}.gamma"] * cache.normalized + params[f"hidden{k}.beta"]
        cache.activated = _activate(layer.activation, cache.pre_activation)
        output = cache.activated
        if train_mode and layer.dropout > 0:
            keep = 1.0 - layer.dropout
            cache.dropout_mask = (rng.random(output.shape) < keep) / keep
            output = output * cache.dropout_mask
        if not np.all(np.isfinite(output)):
            raise NumericFailureException("non-finite activation", layer=k)
        caches.append(cache)
        hidden = output

    s1 = (hidden @ params["bottleneck.weight"] + params["bottleneck.bias"])[:, 0]
    s2 = np.clip(expit(s1[:, None] @ params["head.weight"] + params["head.bias"]), S2_EPSILON, 1.0 - S2_EPSILON)
    if not (np.all(np.isfinite(s1)) and np.all(np.isfinite(s2))):
        raise NumericFailureException("non-finite network output", layer=len(caches))
    return s1, s2, ForwardCache(
        batch_size=batch.shape[0],
        layers=caches,
        bottleneck_input=hidden,
        s1=s1,
        s2=s2,
        batch_moments=moments,
    )


def backward(state: NetworkState, cache: ForwardCache, grad_s1, grad_s2) -> dict[str, np.ndarray]:
    """Exact parameter gradients given upstream gradients on s1 and s2."""
    params = state.parameters
    architecture = state.architecture
    grad_s1 = np.asarray(grad_s1, dtype=np.float64).reshape(-1)
    grad_s2 = np.asarray(grad_s2, dtype=np.float64)
    if grad_s1.shape != (cache.batch_size,) or grad_s2.shape != (cache.batch_size, architecture.horizon_T):
        raise InvalidInputException(
            f"upstream gradient shapes {grad_s1.shape}, {grad_s2.shape} do not match the cached batch"
        )
    if len(cache.layers) != len(architecture.hidden_layers):
        raise InvalidInputException("cache was produced by a different architecture")

    grads: dict[str, np.ndarray] = {}
    head_delta = grad_s2 * cache.s2 * (1.0 - cache.s2)
    grads["head.weight"] = cache.s1[None, :] @ head_delta
    grads["head.bias"] = head_delta.sum(axis=0)

    s1_delta = grad_s1 + (head_delta @ params["head.weight"].T)[:, 0]
    grads["bottleneck.weight"] = cache.bottleneck_input.T @ s1_delta[:, None]
    grads["bottleneck.bias"] = np.array([s1_delta.sum()])
    upstream = s1_delta[:, None] @ params["bottleneck.weight"].T

    for k in range(len(cache.layers) - 1, -1, -1):
        layer = architecture.hidden_layers[k]
        layer_cache = cache.layers[k]
        if layer_cache.dropout_mask is not None:
            upstream = upstream * layer_cache.dropout_mask
        delta = upstream * _activation_slope(layer.activation, layer_cache.pre_activation, layer_cache.activated)
        if layer.batch_norm:
            grads[f"hidden{k}.gamma"] = (delta * layer_cache.normalized).sum(axis=0)
            grads[f"hidden{k}.beta"] = delta.sum(axis=0)
            d_normalized = delta * params[f"hidden{k}.gamma"]
            if layer_cache.batch_statistics:
                n = cache.batch_size
                delta = layer_cache.inv_std / n * (
                    n * d_normalized
                    - d_normalized.sum(axis=0)
                    - layer_cache.normalized * (d_normalized * layer_cache.normalized).sum(axis=0)
                )
            else:
                delta = d_normalized * layer_cache.inv_std
        grads[f"hidden{k}.weight"] = layer_cache.inputs.T @ delta
        grads[f"hidden{k}.bias"] = delta.sum(axis=0)
        upstream = delta @ params[f"hidden{k}.weight"].T

    return {name: grads[name] for name in params}


def update_running_statistics(state: NetworkState, cache: ForwardCache, momentum: float = 0.9) -> None:
    """Exponential moving average of the batch-norm moments seen in a training forward pass."""
    for layer, (mean, var) in cache.batch_moments.items():
        state.buffers[f"{layer}.running_mean"] = momentum * state.buffers[f"{layer}.running_mean"] + (1 - momentum) * mean
        state.buffers[f"{layer}.running_var"] = momentum * state.buffers[f"{layer}.running_var"] + (1 - momentum) * var


def predict(state: NetworkState, features) -> tuple[np.ndarray | float, np.ndarray]:
    """Eval-mode s1 and s2 for one feature vector or a matrix of them."""
    features = np.asarray(features, dtype=np.float64)
    single = features.ndim == 1
    s1, s2, _ = forward(state, features.reshape(1, -1) if single else features, train_mode=False)
    if single:
        return float(s1[0]), s2[0]
    return s1, s2


def monotonicity_violation_rate(s2) -> float:
    """Fraction of adjacent threshold pairs where predicted survival increases."""
    s2 = np.asarray(s2, dtype=np.float64)
    if s2.ndim == 1:
        s2 = s2[None, :]
    if s2.shape[1] < 2:
        return 0.0
    return float(np.mean(s2[:, 1:] > s2[:, :-1]))
