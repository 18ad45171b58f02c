"""Finite-difference verification of the analytic gradients.

All checks run in float64: central differences at h=1e-5 cannot resolve
float32 round-off.  The relative error uses a denominator floor so that
near-zero gradient entries compare on an absolute scale: central differences
of an O(10) loss carry ~1e-10 of rounding noise, so entries below the floor
are held to |analytic - numeric| < floor * tolerance instead of a raw ratio.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import NumericalError
from .nn import Parameter, zero_grads

DENOM_FLOOR = 1e-5


def numeric_gradient(loss_fn: Callable[[], float], param: Parameter,
                     eps: float = 1e-5) -> np.ndarray:
    """Central finite differences of loss_fn wrt every entry of param."""
    grad = np.zeros_like(param.value)
    flat = param.value.reshape(-1)
    gflat = grad.reshape(-1)
    for idx in range(flat.size):
        orig = flat[idx]
        flat[idx] = orig + eps
        up = loss_fn()
        flat[idx] = orig - eps
        down = loss_fn()
        flat[idx] = orig
        gflat[idx] = (up - down) / (2.0 * eps)
    return grad


def gradient_check(loss_fn: Callable[[], float], params: list[Parameter],
                   eps: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients.

    loss_fn must run the full forward AND backward pass, accumulating grads
    into the given parameters, and return the scalar loss.  It must be
    deterministic (any stochastic pieces replaced by their expectation).
    """
    if any(p.value.dtype != np.float64 for p in params):
        raise NumericalError("gradient_check requires float64 parameters")
    zero_grads(params)
    loss = loss_fn()
    if not math.isfinite(loss):
        raise NumericalError(f"non-finite loss {loss} in gradient check")
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        numeric = numeric_gradient(lambda: _forward_only(loss_fn, params), p, eps)
        denom = np.maximum(np.abs(a) + np.abs(numeric), DENOM_FLOOR)
        rel = np.abs(a - numeric) / denom
        worst = max(worst, float(rel.max()))
    zero_grads(params)
    return worst


def _forward_only(loss_fn: Callable[[], float], params: list[Parameter]) -> float:
    # the closure also accumulates grads; discard them after each probe
    loss = loss_fn()
    if not math.isfinite(loss):
        raise NumericalError(f"non-finite loss {loss} in finite-difference probe")
    zero_grads(params)
    return loss


# ---------------- verification suite ----------------

def check_dense(seed: int = 0) -> float:
    from .nn import dense_backward, dense_forward, glorot

    rng = np.random.default_rng(seed)
    worst = 0.0
    for activation in ("tanh", "identity"):
        W = Parameter(glorot((4, 3), rng, np.float64), "W")
        a = Parameter(rng.normal(0, 0.3, (4, 1)), "a")
        x = Parameter(rng.normal(0, 1.0, (3, 2)), "x")

        def loss_fn():
            y, cache = dense_forward(W, a, x.value, activation)
            x.grad += dense_backward(cache, y)
            return 0.5 * float((y ** 2).sum())

        worst = max(worst, gradient_check(loss_fn, [W, a, x]))
    return worst


def check_lstm_cell(seed: int = 0) -> float:
    from .nn import LstmCellParams, lstm_cell_backward, lstm_cell_forward

    rng = np.random.default_rng(seed)
    cell = LstmCellParams(3, 2, rng, np.float64, "cell")
    x = Parameter(rng.normal(0, 1.0, (3, 2)), "x")
    h0 = Parameter(rng.normal(0, 0.5, (2, 2)), "h0")
    c0 = Parameter(rng.normal(0, 0.5, (2, 2)), "c0")

    def loss_fn():
        h, c, cache = lstm_cell_forward(cell, x.value, h0.value, c0.value)
        dx, dh0, dc0 = lstm_cell_backward(cell, cache, h, c)
        x.grad += dx
        h0.grad += dh0
        c0.grad += dc0
        return 0.5 * float((h ** 2).sum() + (c ** 2).sum())

    return gradient_check(loss_fn, cell.parameters() + [x, h0, c0])


def check_blstm(seed: int = 0) -> float:
    from .nn import LstmCellParams, blstm_layer_backward, blstm_layer_forward

    rng = np.random.default_rng(seed)
    fwd = LstmCellParams(3, 2, rng, np.float64, "fwd")
    bwd = LstmCellParams(3, 2, rng, np.float64, "bwd")
    xs = [Parameter(rng.normal(0, 1.0, (3, 2)), f"x{t}") for t in range(3)]

    def loss_fn():
        hs, cs, cache = blstm_layer_forward(fwd, bwd, [x.value for x in xs])
        dxs = blstm_layer_backward(fwd, bwd, cache, hs, cs)
        for x, dx in zip(xs, dxs):
            x.grad += dx
        return 0.5 * sum(float((h ** 2).sum() + (c ** 2).sum()) for h, c in zip(hs, cs))

    return gradient_check(loss_fn, fwd.parameters() + bwd.parameters() + xs)


def check_softmax(seed: int = 0) -> float:
    from .nn import softmax_cross_entropy

    rng = np.random.default_rng(seed)
    logits = Parameter(rng.normal(0, 1.0, (3, 2)), "logits")
    targets = np.array([2, 0])

    def loss_fn():
        loss, dlogits = softmax_cross_entropy(logits.value, targets)
        logits.grad += dlogits
        return loss

    return gradient_check(loss_fn, [logits])


def check_full_graph(seed: int = 0) -> float:
    """Encoder (expectation-mode binarizer) through decoder at tiny dims."""
    from .model import JsccConfig, JsccModel

    config = JsccConfig(vocab_size=10, embed_dim=8, encoder_stacks=2, encoder_hidden=8,
                        decoder_stacks=2, decoder_hidden=8, bits=8, beam_width=1,
                        max_decode_len=8, precision="f64")
    model = JsccModel(config, seed=seed)
    ids = np.array([[4, 5, 6]], dtype=np.int64)
    targets = np.array([[4, 5, 6, 3]], dtype=np.int64)  # ends with EOS (id 3)
    half = config.bits // 2

    def loss_fn():
        xs, ids_full = model._embed_steps(ids)
        h_star, c_star, enc_cache = model._encoder_forward(xs)
        obs = np.concatenate([h_star, c_star], axis=0)
        loss, _, dec_cache = model.decode_teacher_forced(obs, targets, tf_prob=1.0)
        d_obs = model.decode_backward(dec_cache)
        model._encoder_backward(enc_cache, d_obs[:half], d_obs[half:], ids_full)
        return loss

    return gradient_check(loss_fn, model.parameters())


def run_verification_suite(seed: int = 0) -> dict[str, float]:
    """Max relative finite-difference error for every differentiable op."""
    return {
        "dense": check_dense(seed),
        "lstm_cell": check_lstm_cell(seed),
        "blstm_layer": check_blstm(seed),
        "softmax_cross_entropy": check_softmax(seed),
        "full_graph": check_full_graph(seed),
    }
