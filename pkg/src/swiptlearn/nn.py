"""Minimal dense network machinery: forward, exact backprop, Adam, cross-entropy.

Everything operates on float64 numpy arrays.  Layers apply an affine map
followed by one of {identity, relu, softmax}; softmax is restricted to the
final layer.  forward() returns a cache that backward() consumes to produce
exact reverse-mode gradients for every weight, bias and the network input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("identity", "relu", "softmax")

# Probability floor applied inside log() for cross-entropy.
PROB_FLOOR = 1e-12


class TrainingError(RuntimeError):
    """An optimization step or training run cannot continue."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax (max-logit subtraction)."""
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class DenseLayer:
    """One affine layer: out = act(weights @ x + biases), weights (out_dim, in_dim)."""

    weights: np.ndarray
    biases: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        if self.weights.ndim != 2:
            raise ValueError(f"weights must be 2-D, got shape {self.weights.shape}")
        if self.biases.shape != (self.weights.shape[0],):
            raise ValueError(
                f"biases shape {self.biases.shape} does not match out_dim {self.weights.shape[0]}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise ValueError("layer parameters must be finite")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}, expected one of {ACTIVATIONS}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class Mlp:
    """Ordered stack of DenseLayers with chained dimensions."""

    layers: list[DenseLayer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("Mlp needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")
        for layer in self.layers[:-1]:
            if layer.activation == "softmax":
                raise ValueError("softmax is only allowed in the final layer")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> list[np.ndarray]:
        """Weight and bias arrays in layer order (views, not copies)."""
        out = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.biases)
        return out


def glorot_mlp(dims, activations, rng: np.random.Generator) -> Mlp:
    """Mlp with Glorot-uniform weights (+-sqrt(6/(in+out))) and zero biases."""
    dims = list(dims)
    activations = list(activations)
    if len(activations) != len(dims) - 1:
        raise ValueError(f"{len(dims)} dims need {len(dims) - 1} activations, got {len(activations)}")
    layers = []
    for (din, dout), act in zip(zip(dims, dims[1:]), activations):
        limit = math.sqrt(6.0 / (din + dout))
        w = rng.uniform(-limit, limit, size=(dout, din))
        layers.append(DenseLayer(w, np.zeros(dout), act))
    return Mlp(layers)


@dataclass
class ForwardCache:
    """Per-layer (input, pre-activation, post-activation) from one forward pass."""

    entries: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    squeeze: bool


def forward(net: Mlp, x) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on a vector or a (batch, in_dim) matrix.

    Returns (output, cache); the output keeps the input's vector/matrix shape.
    """
    a = np.asarray(x, dtype=float)
    squeeze = a.ndim == 1
    a = np.atleast_2d(a)
    if a.ndim != 2 or a.shape[1] != net.in_dim:
        raise ValueError(f"input shape {np.shape(x)} does not match in_dim {net.in_dim}")
    entries = []
    for layer in net.layers:
        pre = a @ layer.weights.T + layer.biases
        if layer.activation == "relu":
            post = np.maximum(pre, 0.0)
        elif layer.activation == "softmax":
            post = softmax(pre, axis=1)
        else:
            post = pre
        entries.append((a, pre, post))
        a = post
    cache = ForwardCache(entries, squeeze)
    return (a[0] if squeeze else a), cache


def backward(net: Mlp, cache: ForwardCache, output_gradient) -> tuple[list[np.ndarray], np.ndarray]:
    """Exact reverse-mode gradients for a matching forward() call.

    output_gradient is dLoss/dOutput with the output's shape.  Returns
    (param_grads, input_grad) with param_grads aligned to net.parameters().
    Gradients are summed over the batch; scale the output gradient for means.
    """
    if not isinstance(cache, ForwardCache) or len(cache.entries) != len(net.layers):
        raise ValueError("cache does not match this network")
    g = np.atleast_2d(np.asarray(output_gradient, dtype=float))
    if g.shape != cache.entries[-1][2].shape:
        raise ValueError(
            f"output_gradient shape {np.shape(output_gradient)} does not match output "
            f"{cache.entries[-1][2].shape}"
        )
    grads: list[np.ndarray] = []
    for layer, (inp, pre, post) in zip(reversed(net.layers), reversed(cache.entries)):
        if inp.shape[1] != layer.in_dim or pre.shape[1] != layer.out_dim:
            raise ValueError("cache does not match this network")
        if layer.activation == "softmax":
            gz = post * (g - (g * post).sum(axis=1, keepdims=True))
        elif layer.activation == "relu":
            gz = g * (pre > 0.0)
        else:
            gz = g
        grads.append(gz.sum(axis=0))      # biases
        grads.append(gz.T @ inp)          # weights
        g = gz @ layer.weights
    grads.reverse()
    return grads, (g[0] if cache.squeeze else g)


def cross_entropy(one_hot, probs) -> float:
    """Negative log-likelihood -log(probs[hot]) with a 1e-12 floor inside the log."""
    s = np.asarray(one_hot, dtype=float).ravel()
    p = np.asarray(probs, dtype=float).ravel()
    if s.shape != p.shape:
        raise ValueError(f"one_hot shape {s.shape} does not match probs shape {p.shape}")
    hot = np.flatnonzero(s != 0.0)
    if hot.size != 1 or s[hot[0]] != 1.0:
        raise ValueError("one_hot must contain exactly one entry equal to 1 and zeros elsewhere")
    if np.any(p < 0.0) or not np.all(np.isfinite(p)):
        raise ValueError("probs must be finite and >= 0")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probs must sum to 1 within 1e-9, got {p.sum()!r}")
    return -math.log(max(p[hot[0]], PROB_FLOOR))


@dataclass
class AdamState:
    """Adam moments for a fixed list of parameter arrays."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def init(cls, params, learning_rate: float = 1e-3, beta1: float = 0.9,
             beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
            learning_rate=learning_rate,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )


def adam_step(params, grads, state: AdamState) -> None:
    """One bias-corrected Adam update, applied to the parameter arrays in place."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValueError("params, grads and state must have matching lengths")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(
                f"non-finite gradient at step {state.step_count + 1}", step=state.step_count + 1
            )
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)


def mlp_to_dict(net: Mlp) -> dict:
    """JSON-ready description: dims, activation names, row-major weights."""
    return {
        "layers": [
            {
                "in_dim": layer.in_dim,
                "out_dim": layer.out_dim,
                "activation": layer.activation,
                "weights": layer.weights.tolist(),
                "biases": layer.biases.tolist(),
            }
            for layer in net.layers
        ]
    }


def mlp_from_dict(doc: dict) -> Mlp:
    """Inverse of mlp_to_dict; validates shapes via the layer constructors."""
    try:
        layers = [
            DenseLayer(np.array(d["weights"], dtype=float), np.array(d["biases"], dtype=float),
                       d["activation"])
            for d in doc["layers"]
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed network document: {exc}") from exc
    return Mlp(layers)
