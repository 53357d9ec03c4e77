"""Small fully connected network with hand-written backpropagation."""

from __future__ import annotations

import numpy as np


class MLP:
    """ReLU hidden layers and a single linear output unit.

    The output layer starts at zero, so a fresh network predicts the same raw
    value for every input.
    """

    def __init__(self, sizes: list[int], rng: np.random.Generator | None = None):
        if len(sizes) < 2 or sizes[-1] != 1:
            raise ValueError("sizes must end with a single output unit")
        rng = rng or np.random.default_rng(0)
        self.sizes = list(sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            if fan_out == 1:
                w = np.zeros((fan_in, fan_out))
            else:
                w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Raw outputs of shape (N,) and the activations needed for backward."""
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if k == last else np.maximum(z, 0.0)
            acts.append(h)
        return h[:, 0], acts

    def backward(self, acts: list[np.ndarray], grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients (same order as ``params``) given dLoss/dOutput of shape (N,)."""
        grads: list[np.ndarray] = []
        delta = grad_out[:, None]
        for k in range(len(self.weights) - 1, -1, -1):
            h_in = acts[k]
            gw = h_in.T @ delta
            gb = delta.sum(axis=0)
            grads = [gw, gb] + grads
            if k:
                delta = (delta @ self.weights[k].T) * (acts[k] > 0)
        return grads

    def copy(self) -> "MLP":
        other = MLP.__new__(MLP)
        other.sizes = list(self.sizes)
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        scale = self.lr * np.sqrt(1 - b2**self.t) / (1 - b1**self.t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= scale * m / (np.sqrt(v) + self.eps)


def make_optimizer(name: str, lr: float):
    if name == "sgd":
        return SGD(lr)
    if name == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {name!r}")
