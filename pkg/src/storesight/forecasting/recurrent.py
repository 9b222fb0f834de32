"""GRU and LSTM regressors in plain numpy, with backprop through time.

Weights follow the ``x @ W.T + h @ U.T + b`` convention with ``W`` of shape
``(hidden, input)`` and ``U`` of shape ``(hidden, hidden)``. The prediction is a
linear read-out of the final hidden state. All functions accept either a single
window ``(T, input)`` or a batch ``(B, T, input)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch

GATES = {"gru": ("z", "r", "h"), "lstm": ("i", "f", "o", "g")}


@dataclass
class RecurrentParams:
    kind: str
    input_size: int
    hidden_size: int
    weights: dict[str, np.ndarray]

    def copy(self) -> "RecurrentParams":
        return RecurrentParams(self.kind, self.input_size, self.hidden_size, {k: v.copy() for k, v in self.weights.items()})

    def __getitem__(self, name: str) -> np.ndarray:
        return self.weights[name]


def param_shapes(kind: str, input_size: int, hidden_size: int) -> dict[str, tuple[int, ...]]:
    if kind not in GATES:
        raise ValueError(f"unknown recurrent kind {kind!r}")
    shapes = {}
    for g in GATES[kind]:
        shapes[f"W_{g}"] = (hidden_size, input_size)
        shapes[f"U_{g}"] = (hidden_size, hidden_size)
        shapes[f"b_{g}"] = (hidden_size,)
    shapes["W_out"] = (hidden_size,)
    shapes["b_out"] = (1,)
    return shapes


def init_params(kind: str, input_size: int, hidden_size: int, rng: np.random.Generator) -> RecurrentParams:
    """Uniform initialisation in +-sqrt(1/hidden_size)."""
    bound = np.sqrt(1.0 / hidden_size)
    weights = {
        name: rng.uniform(-bound, bound, size=shape) for name, shape in param_shapes(kind, input_size, hidden_size).items()
    }
    return RecurrentParams(kind, input_size, hidden_size, weights)


def zero_params(kind: str, input_size: int, hidden_size: int) -> RecurrentParams:
    weights = {name: np.zeros(shape) for name, shape in param_shapes(kind, input_size, hidden_size).items()}
    return RecurrentParams(kind, input_size, hidden_size, weights)


def sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def _check(p: RecurrentParams, x, h) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    if x.shape[-1] != p.input_size or h.shape[-1] != p.hidden_size:
        raise ShapeMismatch(
            f"expected input {p.input_size} / hidden {p.hidden_size}, got {x.shape[-1]} / {h.shape[-1]}"
        )
    return x, h


def _gru_step(p: RecurrentParams, x, h):
    w = p.weights
    z = sigmoid(x @ w["W_z"].T + h @ w["U_z"].T + w["b_z"])
    r = sigmoid(x @ w["W_r"].T + h @ w["U_r"].T + w["b_r"])
    rh = r * h
    cand = np.tanh(x @ w["W_h"].T + rh @ w["U_h"].T + w["b_h"])
    h_new = (1.0 - z) * h + z * cand
    return h_new, (x, h, z, r, rh, cand)


def gru_cell(p: RecurrentParams, x, h) -> np.ndarray:
    x, h = _check(p, x, h)
    return _gru_step(p, x, h)[0]


def _lstm_step(p: RecurrentParams, x, h, c):
    w = p.weights
    i = sigmoid(x @ w["W_i"].T + h @ w["U_i"].T + w["b_i"])
    f = sigmoid(x @ w["W_f"].T + h @ w["U_f"].T + w["b_f"])
    o = sigmoid(x @ w["W_o"].T + h @ w["U_o"].T + w["b_o"])
    g = np.tanh(x @ w["W_g"].T + h @ w["U_g"].T + w["b_g"])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (x, h, c, i, f, o, g, tc)


def lstm_cell(p: RecurrentParams, x, h, c) -> tuple[np.ndarray, np.ndarray]:
    x, h = _check(p, x, h)
    c = np.asarray(c, dtype=float)
    if c.shape != h.shape:
        raise ShapeMismatch(f"cell state shape {c.shape} differs from hidden shape {h.shape}")
    h_new, c_new, _ = _lstm_step(p, x, h, c)
    return h_new, c_new


def _as_batch(p: RecurrentParams, window) -> tuple[np.ndarray, bool]:
    xs = np.asarray(window, dtype=float)
    single = xs.ndim == 2
    if single:
        xs = xs[None]
    if xs.ndim != 3 or xs.shape[2] != p.input_size:
        raise ShapeMismatch(f"window must be (T, {p.input_size}) or (B, T, {p.input_size}), got {np.shape(window)}")
    if xs.shape[1] < 1:
        raise ShapeMismatch("window must contain at least one timestep")
    return xs, single


def _forward(p: RecurrentParams, xs: np.ndarray):
    B, T, _ = xs.shape
    h = np.zeros((B, p.hidden_size))
    c = np.zeros((B, p.hidden_size))
    cache = []
    for t in range(T):
        if p.kind == "gru":
            h, step = _gru_step(p, xs[:, t], h)
        else:
            h, c, step = _lstm_step(p, xs[:, t], h, c)
        cache.append(step)
    pred = h @ p.weights["W_out"] + p.weights["b_out"][0]
    return pred, h, cache


def forward(p: RecurrentParams, window) -> np.ndarray | float:
    """Prediction for one window (returns a float) or a batch (returns ``(B,)``)."""
    xs, single = _as_batch(p, window)
    pred = _forward(p, xs)[0]
    return float(pred[0]) if single else pred


def loss_and_gradients(p: RecurrentParams, window, target) -> tuple[float, dict[str, np.ndarray]]:
    """Squared error of the prediction and its gradient for every parameter.

    For a batch the loss is the mean over windows.
    """
    xs, _ = _as_batch(p, window)
    y = np.asarray(target, dtype=float).reshape(-1)
    B = xs.shape[0]
    if len(y) != B:
        raise ShapeMismatch(f"{B} windows but {len(y)} targets")
    pred, h_last, cache = _forward(p, xs)
    resid = pred - y
    loss = float(np.mean(resid**2))

    w = p.weights
    grads = {k: np.zeros_like(v) for k, v in w.items()}
    dpred = 2.0 * resid / B
    grads["W_out"] = h_last.T @ dpred
    grads["b_out"] = np.array([dpred.sum()])
    dh = np.outer(dpred, w["W_out"])

    if p.kind == "gru":
        for x, h, z, r, rh, cand in reversed(cache):
            dz = dh * (cand - h)
            da_h = dh * z * (1.0 - cand**2)
            dh_prev = dh * (1.0 - z)
            grads["W_h"] += da_h.T @ x
            grads["U_h"] += da_h.T @ rh
            grads["b_h"] += da_h.sum(0)
            drh = da_h @ w["U_h"]
            dh_prev += drh * r
            da_r = drh * h * r * (1.0 - r)
            grads["W_r"] += da_r.T @ x
            grads["U_r"] += da_r.T @ h
            grads["b_r"] += da_r.sum(0)
            da_z = dz * z * (1.0 - z)
            grads["W_z"] += da_z.T @ x
            grads["U_z"] += da_z.T @ h
            grads["b_z"] += da_z.sum(0)
            dh = dh_prev + da_r @ w["U_r"] + da_z @ w["U_z"]
    else:
        dc = np.zeros_like(dh)
        for x, h, c, i, f, o, g, tc in reversed(cache):
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc**2)
            pre = {
                "i": dc * g * i * (1.0 - i),
                "f": dc * c * f * (1.0 - f),
                "o": do * o * (1.0 - o),
                "g": dc * i * (1.0 - g**2),
            }
            dh = np.zeros_like(dh)
            for gate, da in pre.items():
                grads[f"W_{gate}"] += da.T @ x
                grads[f"U_{gate}"] += da.T @ h
                grads[f"b_{gate}"] += da.sum(0)
                dh += da @ w[f"U_{gate}"]
            dc = dc * f
    return loss, grads


class Adam:
    """Adaptive-moment gradient descent over a dict of arrays."""

    def __init__(self, params: dict[str, np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
