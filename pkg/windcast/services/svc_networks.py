"""
Forward and backward passes for the trainable networks, in plain numpy.

Parameters live in flat dicts of float64 arrays so the optimizer, the gradient
check and JSON persistence can treat every kind the same way. Inputs arrive
as (N, P, F) windows; the FCNN flattens them, the GRU reads them step by step.
"""
from typing import Dict, Optional, Tuple, Union

import numpy as np

from windcast.models.mod_model import FCNNKind, GRUKind
from windcast.validators.val_errors import UsageError

Params = Dict[str, np.ndarray]
NetworkKind = Union[FCNNKind, GRUKind]

GRU_GATES = ("z", "r", "h")


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape: Tuple[int, ...]) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class NetworkService:
    @staticmethod
    def init_params(kind: NetworkKind, past_steps: int, feature_count: int, rng: np.random.Generator) -> Params:
        """Glorot-uniform weights, zero biases."""
        params: Params = {}
        if isinstance(kind, FCNNKind):
            sizes = kind.layer_sizes(past_steps * feature_count)
            for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
                params[f"W{layer}"] = _glorot(rng, fan_in, fan_out, (fan_in, fan_out))
                params[f"b{layer}"] = np.zeros(fan_out)
            return params
        if isinstance(kind, GRUKind):
            hidden = kind.hidden_size
            for gate in GRU_GATES:
                params[f"W_{gate}"] = _glorot(rng, feature_count, hidden, (feature_count, hidden))
                params[f"U_{gate}"] = _glorot(rng, hidden, hidden, (hidden, hidden))
                params[f"b_{gate}"] = np.zeros(hidden)
            params["w_out"] = _glorot(rng, hidden, 1, (hidden,))
            params["b_out"] = np.zeros(1)
            return params
        raise UsageError(f"no network for model kind {kind.kind}", code="unknown_model")

    # FCNN

    @staticmethod
    def fcnn_forward(params: Params, inputs: np.ndarray, activation: str = "relu") -> Tuple[np.ndarray, list]:
        layers = len(params) // 2
        a = inputs.reshape(inputs.shape[0], -1)
        cache = []
        for layer in range(layers):
            z = a @ params[f"W{layer}"] + params[f"b{layer}"]
            cache.append((a, z))
            if layer < layers - 1:
                a = np.maximum(z, 0.0) if activation == "relu" else np.tanh(z)
            else:
                a = z
        return a[:, 0], cache

    @staticmethod
    def fcnn_backward(params: Params, cache: list, d_out: np.ndarray, activation: str = "relu") -> Params:
        layers = len(params) // 2
        grads: Params = {}
        delta = d_out[:, None]
        for layer in reversed(range(layers)):
            a_prev, _ = cache[layer]
            grads[f"W{layer}"] = a_prev.T @ delta
            grads[f"b{layer}"] = delta.sum(axis=0)
            if layer > 0:
                upstream = delta @ params[f"W{layer}"].T
                z_prev = cache[layer - 1][1]
                if activation == "relu":
                    delta = upstream * (z_prev > 0.0)
                else:
                    delta = upstream * (1.0 - np.tanh(z_prev) ** 2)
        return grads

    # GRU

    @staticmethod
    def gru_forward(params: Params, inputs: np.ndarray) -> Tuple[np.ndarray, list]:
        """
        Single-layer GRU over the window, last hidden state into a linear head.
            z = sigmoid(x W_z + h U_z + b_z)
            r = sigmoid(x W_r + h U_r + b_r)
            n = tanh(x W_h + (r * h) U_h + b_h)
            h' = (1 - z) * n + z * h
        """
        n_samples, steps, _ = inputs.shape
        hidden = params["U_z"].shape[0]
        h = np.zeros((n_samples, hidden))
        cache = []
        for t in range(steps):
            x = inputs[:, t, :]
            z = _sigmoid(x @ params["W_z"] + h @ params["U_z"] + params["b_z"])
            r = _sigmoid(x @ params["W_r"] + h @ params["U_r"] + params["b_r"])
            n = np.tanh(x @ params["W_h"] + (r * h) @ params["U_h"] + params["b_h"])
            cache.append((x, h, z, r, n))
            h = (1.0 - z) * n + z * h
        out = h @ params["w_out"] + params["b_out"][0]
        cache.append(h)
        return out, cache

    @staticmethod
    def gru_backward(params: Params, cache: list, d_out: np.ndarray) -> Params:
        grads: Params = {name: np.zeros_like(value) for name, value in params.items()}
        h_last = cache[-1]
        grads["w_out"] = h_last.T @ d_out
        grads["b_out"] = np.array([d_out.sum()])
        dh = d_out[:, None] * params["w_out"][None, :]
        for x, h_prev, z, r, n in reversed(cache[:-1]):
            dn = dh * (1.0 - z)
            dz = dh * (h_prev - n)
            dh_prev = dh * z

            da_n = dn * (1.0 - n ** 2)
            grads["W_h"] += x.T @ da_n
            grads["U_h"] += (r * h_prev).T @ da_n
            grads["b_h"] += da_n.sum(axis=0)
            d_rh = da_n @ params["U_h"].T
            dr = d_rh * h_prev
            dh_prev += d_rh * r

            da_z = dz * z * (1.0 - z)
            grads["W_z"] += x.T @ da_z
            grads["U_z"] += h_prev.T @ da_z
            grads["b_z"] += da_z.sum(axis=0)
            dh_prev += da_z @ params["U_z"].T

            da_r = dr * r * (1.0 - r)
            grads["W_r"] += x.T @ da_r
            grads["U_r"] += h_prev.T @ da_r
            grads["b_r"] += da_r.sum(axis=0)
            dh_prev += da_r @ params["U_r"].T

            dh = dh_prev
        return grads

    # shared

    @staticmethod
    def forward(kind: NetworkKind, params: Params, inputs: np.ndarray) -> np.ndarray:
        if isinstance(kind, FCNNKind):
            return NetworkService.fcnn_forward(params, inputs, kind.activation)[0]
        return NetworkService.gru_forward(params, inputs)[0]

    @staticmethod
    def loss_and_grads(kind: NetworkKind, params: Params, inputs: np.ndarray, targets: np.ndarray) -> Tuple[float, Params]:
        """Mean squared error over the batch and its gradient."""
        if isinstance(kind, FCNNKind):
            out, cache = NetworkService.fcnn_forward(params, inputs, kind.activation)
        else:
            out, cache = NetworkService.gru_forward(params, inputs)
        residual = out - targets
        loss = float(np.mean(residual ** 2))
        d_out = 2.0 * residual / residual.size
        if isinstance(kind, FCNNKind):
            grads = NetworkService.fcnn_backward(params, cache, d_out, kind.activation)
        else:
            grads = NetworkService.gru_backward(params, cache, d_out)
        return loss, grads

    @staticmethod
    def loss(kind: NetworkKind, params: Params, inputs: np.ndarray, targets: np.ndarray) -> float:
        return float(np.mean((NetworkService.forward(kind, params, inputs) - targets) ** 2))

    @staticmethod
    def grad_check(
        kind: NetworkKind,
        sample: Tuple[np.ndarray, np.ndarray],
        epsilon: float = 1e-5,
        seed: int = 0,
        params: Optional[Params] = None,
    ) -> float:
        """
        Max relative error between analytic and central finite-difference gradients:
        |g_a - g_fd| / max(|g_a|, |g_fd|, 1e-8) over every parameter entry.
        """
        if not isinstance(kind, (FCNNKind, GRUKind)):
            raise UsageError(f"gradient check applies to networks only, not {kind.kind}", code="unknown_model")
        inputs, targets = sample
        inputs = np.asarray(inputs, dtype=float)
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        if inputs.ndim == 2:
            inputs = inputs[None]
        if params is None:
            params = NetworkService.init_params(kind, inputs.shape[1], inputs.shape[2], np.random.default_rng(seed))
        params = {name: value.astype(float).copy() for name, value in params.items()}
        _, analytic = NetworkService.loss_and_grads(kind, params, inputs, targets)

        worst = 0.0
        for name, value in params.items():
            flat = value.reshape(-1)
            grad = analytic[name].reshape(-1)
            for i in range(flat.size):
                original = flat[i]
                flat[i] = original + epsilon
                upper = NetworkService.loss(kind, params, inputs, targets)
                flat[i] = original - epsilon
                lower = NetworkService.loss(kind, params, inputs, targets)
                flat[i] = original
                numeric = (upper - lower) / (2.0 * epsilon)
                scale = max(abs(grad[i]), abs(numeric), 1e-8)
                worst = max(worst, abs(grad[i] - numeric) / scale)
        return worst
