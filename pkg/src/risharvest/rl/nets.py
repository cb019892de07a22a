"""Minimal feedforward substrate used by the agents: fully connected nets
with ReLU hidden layers, manual backprop, Adam, soft target updates and
the softmax weighted value reduction.

Everything is float64 numpy; no autograd framework behind it, which keeps
runs bit reproducible and lets tests finite difference the gradients.
"""

import numpy as np


class Mlp:
    """Fully connected net, ReLU hidden layers.

    out_activation: "tanh" squashes into (-1, 1) for actors, "linear"
    leaves the head open for critics. Hidden weights use He uniform init,
    the final layer starts near zero (uniform +-3e-3) so early actions sit
    at the action space midpoint and early values near zero.
    """

    def __init__(self, sizes, out_activation="tanh", rng=None,
                 final_scale=3e-3):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if out_activation not in ("tanh", "linear"):
            raise ValueError("out_activation must be 'tanh' or 'linear'")
        if rng is None:
            rng = np.random.default_rng()
        self.sizes = tuple(int(s) for s in sizes)
        self.out_activation = out_activation
        self.weights = []
        self.biases = []
        for i in range(len(self.sizes) - 1):
            fan_in, fan_out = self.sizes[i], self.sizes[i + 1]
            if i == len(self.sizes) - 2:
                bound = final_scale
            else:
                bound = np.sqrt(6.0 / fan_in)
            self.weights.append(rng.uniform(-bound, bound,
                                            size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    # ------------------------------------------------------------------

    def parameters(self):
        """Flat list [W0, b0, W1, b1, ...]; arrays are live references."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self):
        other = Mlp.__new__(Mlp)
        other.sizes = self.sizes
        other.out_activation = self.out_activation
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    # ------------------------------------------------------------------

    def forward(self, x):
        y, _ = self.forward_cache(x)
        return y

    def forward_cache(self, x):
        """Returns (output, cache) with cache holding layer inputs and
        pre-activations for backward()."""
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.sizes[0]:
            raise ValueError("input width %d, net expects %d"
                             % (x.shape[1], self.sizes[0]))
        inputs = []
        preacts = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ w + b
            preacts.append(z)
            if i < last:
                h = np.maximum(z, 0.0)
            elif self.out_activation == "tanh":
                h = np.tanh(z)
            else:
                h = z
        cache = (inputs, preacts, squeeze)
        return (h[0] if squeeze else h), cache

    def backward(self, cache, dy):
        """Backprop dL/dy through the net.

        Returns (grads, dx): grads matches parameters() order, dx is
        dL/dinput (same leading shape as the forward input).
        """
        inputs, preacts, squeeze = cache
        dy = np.asarray(dy, dtype=float)
        if squeeze and dy.ndim == 1:
            dy = dy[None, :]
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        last = len(self.weights) - 1
        delta = dy
        for i in range(last, -1, -1):
            z = preacts[i]
            if i < last:
                delta = delta * (z > 0.0)
            elif self.out_activation == "tanh":
                delta = delta * (1.0 - np.tanh(z) ** 2)
            grads_w[i] = inputs[i].T @ delta
            grads_b[i] = np.sum(delta, axis=0)
            delta = delta @ self.weights[i].T
        grads = []
        for gw, gb in zip(grads_w, grads_b):
            grads.append(gw)
            grads.append(gb)
        dx = delta[0] if squeeze else delta
        return grads, dx


class Adam:
    """Bias corrected Adam over a parameter list (in place updates)."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ValueError("lr must be > 0")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ValueError("parameter list changed size")
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def soft_update(target, source, rate):
    """target <- (1 - rate) * target + rate * source, in place."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    for pt, ps in zip(target.parameters(), source.parameters()):
        pt *= (1.0 - rate)
        pt += rate * ps


def softmax_value(q, beta, axis=-1):
    """Softmax weighted mean of values: sum_i q_i softmax(beta q)_i.

    beta = 0 gives the plain mean; beta -> inf approaches the max. The
    result always lies in [min q, max q]. Stable under large beta*q via
    max subtraction.
    """
    q = np.asarray(q, dtype=float)
    if q.size == 0:
        raise ValueError("empty value set")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    z = beta * q
    z = z - np.max(z, axis=axis, keepdims=True)
    w = np.exp(z)
    w = w / np.sum(w, axis=axis, keepdims=True)
    return np.sum(w * q, axis=axis)
