"""Minimal neural toolkit: two-hidden-layer MLPs, backprop, Adam, targets.

Sized for the control agents in this repo (hidden widths 128 and 64 by
default). Everything is float64 numpy; forward/backward are deterministic
given parameters and input. Actors squash outputs to [0, 1] with the logistic
function; critics use an identity output.
"""

from __future__ import annotations

import numpy as np

HIDDEN_SIZES = (128, 64)

PARAM_KEYS = ("w1", "b1", "w2", "b2", "w3", "b3")


class Mlp:
    """in -> h1 -> h2 -> out with rectifier hidden activations."""

    def __init__(self, in_dim: int, out_dim: int, params: dict, out_act: str):
        if out_act not in ("logistic", "identity"):
            raise ValueError(f"unknown output activation {out_act!r}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.out_act = out_act
        self.params = params
        self.check_shapes()

    @classmethod
    def init(cls, in_dim: int, out_dim: int, rng: np.random.Generator,
             hidden=HIDDEN_SIZES, out_act: str = "logistic") -> "Mlp":
        """Scaled uniform fan-in init, seeded by ``rng``."""
        h1, h2 = hidden
        params = {}
        for key_w, key_b, fan_in, fan_out in (
            ("w1", "b1", in_dim, h1),
            ("w2", "b2", h1, h2),
            ("w3", "b3", h2, out_dim),
        ):
            bound = 1.0 / np.sqrt(max(fan_in, 1))
            params[key_w] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            params[key_b] = rng.uniform(-bound, bound, size=(fan_out,))
        return cls(in_dim, out_dim, params, out_act)

    @property
    def hidden(self):
        return (self.params["w1"].shape[1], self.params["w2"].shape[1])

    def check_shapes(self):
        p = self.params
        h1, h2 = p["w1"].shape[1], p["w2"].shape[1]
        expect = {
            "w1": (self.in_dim, h1), "b1": (h1,),
            "w2": (h1, h2), "b2": (h2,),
            "w3": (h2, self.out_dim), "b3": (self.out_dim,),
        }
        for k, shape in expect.items():
            if p[k].shape != shape:
                raise ValueError(f"parameter {k} has shape {p[k].shape}, expected {shape}")
            if not np.isfinite(p[k]).all():
                raise ValueError(f"parameter {k} contains non-finite entries")

    def copy(self) -> "Mlp":
        return Mlp(self.in_dim, self.out_dim,
                   {k: v.copy() for k, v in self.params.items()}, self.out_act)

    # -- evaluation --------------------------------------------------------

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_cache(x)
        return y

    def forward_cache(self, x: np.ndarray):
        """Forward pass keeping intermediates for :meth:`backward`."""
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.in_dim:
            raise ValueError(f"input width {x.shape[1]} != declared in-size {self.in_dim}")
        p = self.params
        z1 = x @ p["w1"] + p["b1"]
        h1 = np.maximum(z1, 0.0)
        z2 = h1 @ p["w2"] + p["b2"]
        h2 = np.maximum(z2, 0.0)
        z3 = h2 @ p["w3"] + p["b3"]
        if self.out_act == "logistic":
            # stable logistic: only ever exponentiates non-positive values
            pos = z3 >= 0
            ez = np.exp(np.where(pos, -z3, z3))
            y = np.where(pos, 1.0 / (1.0 + ez), ez / (1.0 + ez))
        else:
            y = z3
        cache = (x, z1, h1, z2, h2, y, squeeze)
        return (y[0] if squeeze else y), cache

    def backward(self, cache, dy: np.ndarray):
        """Exact gradients of the forward map.

        Returns ``(grads, dx)``: per-parameter gradients and the gradient with
        respect to the input (needed to route critic gradients into actors).
        """
        x, z1, h1, z2, h2, y, squeeze = cache
        dy = np.asarray(dy, dtype=float)
        if squeeze:
            dy = dy[None, :]
        if dy.shape != y.shape:
            raise ValueError(f"upstream gradient shape {dy.shape} != output shape {y.shape}")
        p = self.params
        if self.out_act == "logistic":
            dz3 = dy * y * (1.0 - y)
        else:
            dz3 = dy
        grads = {}
        grads["w3"] = h2.T @ dz3
        grads["b3"] = dz3.sum(axis=0)
        dh2 = dz3 @ p["w3"].T
        dz2 = dh2 * (z2 > 0)
        grads["w2"] = h1.T @ dz2
        grads["b2"] = dz2.sum(axis=0)
        dh1 = dz2 @ p["w2"].T
        dz1 = dh1 * (z1 > 0)
        grads["w1"] = x.T @ dz1
        grads["b1"] = dz1.sum(axis=0)
        dx = dz1 @ p["w1"].T
        return grads, (dx[0] if squeeze else dx)


class AdamState:
    """Per-parameter first/second moment accumulators and step counter."""

    def __init__(self, params: dict, lr: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def reset(self):
        self.step = 0
        for k in self.m:
            self.m[k][:] = 0.0
            self.v[k][:] = 0.0


def adam_step(params: dict, grads: dict, state: AdamState):
    """One Adam update with bias correction, in place."""
    state.step += 1
    t = state.step
    for k, g in grads.items():
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient for parameter {k!r}")
        state.m[k] = state.beta1 * state.m[k] + (1 - state.beta1) * g
        state.v[k] = state.beta2 * state.v[k] + (1 - state.beta2) * g * g
        m_hat = state.m[k] / (1 - state.beta1 ** t)
        v_hat = state.v[k] / (1 - state.beta2 ** t)
        params[k] -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


def update_target(target: Mlp, online: Mlp, mode: str = "soft", tau: float = 0.01):
    """hard: copy; soft: target <- tau*online + (1 - tau)*target, in place."""
    for k, src in online.params.items():
        dst = target.params[k]
        if dst.shape != src.shape:
            raise ValueError(f"target/online shape mismatch for {k}")
        if mode == "hard":
            dst[:] = src
        elif mode == "soft":
            dst[:] = tau * src + (1 - tau) * dst
        else:
            raise ValueError(f"unknown target update mode {mode!r}")
    return target


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error and its gradient with respect to ``pred``."""
    diff = pred - target
    n = diff.size
    return float((diff * diff).mean()), 2.0 * diff / n


def rmse_loss(pred: np.ndarray, target: np.ndarray):
    """Root mean squared error and its gradient with respect to ``pred``.

    Gradient is 0 at the (non-differentiable) zero-error point.
    """
    diff = pred - target
    n = diff.size
    val = float(np.sqrt((diff * diff).mean()))
    if val < 1e-12:
        return val, np.zeros_like(diff)
    return val, diff / (n * val)


LOSSES = {"mse": mse_loss, "rmse": rmse_loss}
