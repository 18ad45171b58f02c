"""Reverse-mode numeric substrate: dense layers, peephole LSTM cells,
bidirectional stacks, and softmax cross-entropy.

Everything operates on 2-D numpy arrays laid out (features, batch); biases
and peephole weights are (features, 1) columns that broadcast over the batch.
Training runs in float32 by default, gradient checks require float64.

Peephole recurrence (with sigma the logistic function):
    i = sigma(W_ix x + W_ih h + p_i * c_prev + b_i)
    f = sigma(W_fx x + W_fh h + p_f * c_prev + b_f)
    g = tanh (W_gx x + W_gh h + b_g)
    c = f * c_prev + i * g
    o = sigma(W_ox x + W_oh h + p_o * c + b_o)
    h = o * tanh(c)
"""

from __future__ import annotations

import numpy as np

from .errors import EmptySequence, ShapeError


class Parameter:
    """A trainable array paired with its gradient accumulator."""

    def __init__(self, value: np.ndarray, name: str = ""):
        self.value = np.ascontiguousarray(value)
        self.grad = np.zeros_like(self.value)
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def glorot(shape: tuple[int, int], rng: np.random.Generator, dtype) -> np.ndarray:
    """Uniform(-r, r) with r = sqrt(6 / (fan_in + fan_out))."""
    fan_out, fan_in = shape
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape).astype(dtype)


def zero_grads(params) -> None:
    for p in params:
        p.zero_grad()


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split form avoids overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def dense_forward(W: Parameter, a: Parameter, x: np.ndarray, activation: str = "tanh"):
    """activation(W x + a) applied column-wise; returns (output, cache)."""
    if W.value.shape[1] != x.shape[0]:
        raise ShapeError(f"dense: W is {W.value.shape}, x is {x.shape}")
    if a.value.shape != (W.value.shape[0], 1):
        raise ShapeError(f"dense: bias is {a.value.shape}, want ({W.value.shape[0]}, 1)")
    if activation not in ("tanh", "identity"):
        raise ShapeError(f"unknown activation {activation!r}")
    z = W.value @ x + a.value
    y = np.tanh(z) if activation == "tanh" else z
    return y, (W, a, x, y, activation)


def dense_backward(cache, dy: np.ndarray) -> np.ndarray:
    """Accumulate W.grad and a.grad; return the gradient wrt the input."""
    W, a, x, y, activation = cache
    if dy.shape != y.shape:
        raise ShapeError(f"dense backward: upstream {dy.shape}, output {y.shape}")
    dz = dy * (1.0 - y * y) if activation == "tanh" else dy
    W.grad += dz @ x.T
    a.grad += dz.sum(axis=1, keepdims=True)
    return W.value.T @ dz


class LstmCellParams:
    """Weights for one peephole LSTM cell."""

    GATES = ("i", "f", "g", "o")

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator,
                 dtype=np.float32, prefix: str = "lstm"):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        h, d = hidden_dim, input_dim

        def w(name, shape):
            return Parameter(glorot(shape, rng, dtype), f"{prefix}.{name}")

        def b(name, fill=0.0):
            return Parameter(np.full((h, 1), fill, dtype=dtype), f"{prefix}.{name}")

        self.W_ix, self.W_ih = w("W_ix", (h, d)), w("W_ih", (h, h))
        self.p_i, self.b_i = w("p_i", (h, 1)), b("b_i")
        self.W_fx, self.W_fh = w("W_fx", (h, d)), w("W_fh", (h, h))
        self.p_f, self.b_f = w("p_f", (h, 1)), b("b_f", 1.0)  # open forget gate
        self.W_gx, self.W_gh = w("W_gx", (h, d)), w("W_gh", (h, h))
        self.b_g = b("b_g")
        self.W_ox, self.W_oh = w("W_ox", (h, d)), w("W_oh", (h, h))
        self.p_o, self.b_o = w("p_o", (h, 1)), b("b_o")

    def parameters(self) -> list[Parameter]:
        return [
            self.W_ix, self.W_ih, self.p_i, self.b_i,
            self.W_fx, self.W_fh, self.p_f, self.b_f,
            self.W_gx, self.W_gh, self.b_g,
            self.W_ox, self.W_oh, self.p_o, self.b_o,
        ]


def lstm_cell_forward(p: LstmCellParams, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
    """One recurrence step; returns (h, c, cache)."""
    if x.shape[0] != p.input_dim:
        raise ShapeError(f"cell input has {x.shape[0]} rows, expected {p.input_dim}")
    if h_prev.shape[0] != p.hidden_dim or c_prev.shape[0] != p.hidden_dim:
        raise ShapeError("cell state dims do not match hidden_dim")
    i = sigmoid(p.W_ix.value @ x + p.W_ih.value @ h_prev + p.p_i.value * c_prev + p.b_i.value)
    f = sigmoid(p.W_fx.value @ x + p.W_fh.value @ h_prev + p.p_f.value * c_prev + p.b_f.value)
    g = np.tanh(p.W_gx.value @ x + p.W_gh.value @ h_prev + p.b_g.value)
    c = f * c_prev + i * g
    o = sigmoid(p.W_ox.value @ x + p.W_oh.value @ h_prev + p.p_o.value * c + p.b_o.value)
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, g, o, c, tc)


def lstm_cell_backward(p: LstmCellParams, cache, dh: np.ndarray, dc_in: np.ndarray):
    """Backward through one step.

    dh and dc_in are the total gradients flowing into h_t and c_t (recurrent
    plus external).  Accumulates parameter gradients and returns
    (dx, dh_prev, dc_prev).
    """
    x, h_prev, c_prev, i, f, g, o, c, tc = cache
    dzo = dh * tc * o * (1.0 - o)
    dc = dc_in + dh * o * (1.0 - tc * tc) + dzo * p.p_o.value
    dzf = dc * c_prev * f * (1.0 - f)
    dzi = dc * g * i * (1.0 - i)
    dzg = dc * i * (1.0 - g * g)

    for dz, Wx, Wh in ((dzi, p.W_ix, p.W_ih), (dzf, p.W_fx, p.W_fh),
                       (dzg, p.W_gx, p.W_gh), (dzo, p.W_ox, p.W_oh)):
        Wx.grad += dz @ x.T
        Wh.grad += dz @ h_prev.T
    p.b_i.grad += dzi.sum(axis=1, keepdims=True)
    p.b_f.grad += dzf.sum(axis=1, keepdims=True)
    p.b_g.grad += dzg.sum(axis=1, keepdims=True)
    p.b_o.grad += dzo.sum(axis=1, keepdims=True)
    p.p_i.grad += (dzi * c_prev).sum(axis=1, keepdims=True)
    p.p_f.grad += (dzf * c_prev).sum(axis=1, keepdims=True)
    p.p_o.grad += (dzo * c).sum(axis=1, keepdims=True)

    dx = (p.W_ix.value.T @ dzi + p.W_fx.value.T @ dzf
          + p.W_gx.value.T @ dzg + p.W_ox.value.T @ dzo)
    dh_prev = (p.W_ih.value.T @ dzi + p.W_fh.value.T @ dzf
               + p.W_gh.value.T @ dzg + p.W_oh.value.T @ dzo)
    dc_prev = dc * f + dzi * p.p_i.value + dzf * p.p_f.value
    return dx, dh_prev, dc_prev


def lstm_run(p: LstmCellParams, xs: list[np.ndarray], h0: np.ndarray | None = None,
             c0: np.ndarray | None = None):
    """Run the cell over a sequence; returns (hs, cs, caches)."""
    if not xs:
        raise EmptySequence("lstm_run needs a nonempty sequence")
    batch = xs[0].shape[1]
    dtype = p.W_ix.value.dtype
    h = np.zeros((p.hidden_dim, batch), dtype=dtype) if h0 is None else h0
    c = np.zeros((p.hidden_dim, batch), dtype=dtype) if c0 is None else c0
    hs, cs, caches = [], [], []
    for x in xs:
        h, c, cache = lstm_cell_forward(p, x, h, c)
        hs.append(h)
        cs.append(c)
        caches.append(cache)
    return hs, cs, caches


def lstm_run_backward(p: LstmCellParams, caches, dhs, dcs):
    """BPTT over a cached run.

    dhs[t] / dcs[t] are the external gradients into h_t / c_t (zero arrays
    where nothing flows in).  Returns (dxs, dh0, dc0).
    """
    dh_next = np.zeros_like(dhs[-1])
    dc_next = np.zeros_like(dcs[-1])
    dxs = [None] * len(caches)
    for t in reversed(range(len(caches))):
        dx, dh_next, dc_next = lstm_cell_backward(
            p, caches[t], dhs[t] + dh_next, dcs[t] + dc_next)
        dxs[t] = dx
    return dxs, dh_next, dc_next


def blstm_layer_forward(fwd: LstmCellParams, bwd: LstmCellParams, xs: list[np.ndarray]):
    """Bidirectional layer: per-step output and cell state are concatenations
    of the two directions, so both have 2 * hidden_dim rows."""
    if not xs:
        raise EmptySequence("BLSTM input sequence is empty")
    hs_f, cs_f, caches_f = lstm_run(fwd, xs)
    hs_br, cs_br, caches_b = lstm_run(bwd, xs[::-1])
    hs_b, cs_b = hs_br[::-1], cs_br[::-1]
    hs = [np.concatenate([hf, hb], axis=0) for hf, hb in zip(hs_f, hs_b)]
    cs = [np.concatenate([cf, cb], axis=0) for cf, cb in zip(cs_f, cs_b)]
    return hs, cs, (caches_f, caches_b, fwd.hidden_dim)


def blstm_layer_backward(fwd: LstmCellParams, bwd: LstmCellParams, cache, dhs, dcs):
    """Backward through both directions; returns per-step input gradients."""
    caches_f, caches_b, h = cache
    dhs_f = [d[:h] for d in dhs]
    dcs_f = [d[:h] for d in dcs]
    dhs_b = [d[h:] for d in dhs][::-1]
    dcs_b = [d[h:] for d in dcs][::-1]
    dxs_f, _, _ = lstm_run_backward(fwd, caches_f, dhs_f, dcs_f)
    dxs_br, _, _ = lstm_run_backward(bwd, caches_b, dhs_b, dcs_b)
    dxs_b = dxs_br[::-1]
    return [df + db for df, db in zip(dxs_f, dxs_b)]


def softmax(logits: np.ndarray) -> np.ndarray:
    """Column-wise softmax, stabilized by max subtraction."""
    z = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray):
    """Mean over columns of -log softmax at the target row.

    Returns (loss, dlogits) with dlogits = (softmax - onehot) / columns.
    """
    targets = np.asarray(targets, dtype=np.int64)
    v, b = logits.shape
    if targets.shape != (b,):
        raise ShapeError(f"targets shape {targets.shape} does not match {b} columns")
    if np.any(targets < 0) or np.any(targets >= v):
        raise IndexError("target id outside logit rows")
    probs = softmax(logits)
    picked = probs[targets, np.arange(b)]
    loss = float(-np.log(np.maximum(picked, np.finfo(probs.dtype).tiny)).mean())
    dlogits = probs.copy()
    dlogits[targets, np.arange(b)] -= 1.0
    dlogits /= b
    return loss, dlogits
