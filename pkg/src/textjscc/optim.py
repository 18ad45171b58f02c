"""Optimizers: Adam and plain SGD, with global-norm gradient clipping."""

from __future__ import annotations

import numpy as np

from .nn import Parameter


def global_grad_norm(params: list[Parameter]) -> float:
    return float(np.sqrt(sum(float((p.grad ** 2).sum()) for p in params)))


def clip_global_norm(params: list[Parameter], max_norm: float) -> float:
    """Scale all gradients so their joint norm is at most max_norm."""
    norm = global_grad_norm(params)
    if norm > max_norm > 0.0:
        scale = max_norm / norm
        for p in params:
            p.grad *= scale
    return norm


class AdamState:
    """First/second moment accumulators plus hyperparameters."""

    def __init__(self, params: list[Parameter], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, clip: float = 5.0):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps, self.clip = lr, beta1, beta2, eps, clip
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]


def adam_step(params: list[Parameter], state: AdamState) -> None:
    """Standard Adam update with bias correction; gradients are then zeroed."""
    if params is not state.params and list(params) != state.params:
        raise ValueError("parameter list does not match optimizer state")
    if state.clip:
        clip_global_norm(state.params, state.clip)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** state.t
    bias2 = 1.0 - b2 ** state.t
    for p, m, v in zip(state.params, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * p.grad
        v *= b2
        v += (1.0 - b2) * p.grad ** 2
        p.value -= state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
        p.zero_grad()


def sgd_step(params: list[Parameter], lr: float, clip: float = 5.0) -> None:
    """Plain gradient descent; gradients are then zeroed."""
    if clip:
        clip_global_norm(params, clip)
    for p in params:
        p.value -= lr * p.grad
        p.zero_grad()
