"""Single-layer LSTM regressor trained by backpropagation through time."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..errors import DivergenceError, InsufficientDataError, ShapeError
from ..features import clamp_counts, log_difference
from .spec import LstmParams

GATES = ("f", "i", "c", "o")


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def lstm_cell_step(x_t, h_prev, c_prev, weights: dict):
    """One cell update. ``weights`` maps W_f, W_i, W_c, W_o (units x (units + inputs)) and b_f..b_o."""
    x_t = np.asarray(x_t, dtype=float)
    h_prev = np.asarray(h_prev, dtype=float)
    c_prev = np.asarray(c_prev, dtype=float)
    units = h_prev.shape[-1]
    if c_prev.shape != h_prev.shape:
        raise ShapeError(f"c_prev has shape {c_prev.shape}, expected {h_prev.shape}")
    hx = np.concatenate([h_prev, x_t], axis=-1)
    pre = {}
    for g in GATES:
        W, b = np.asarray(weights[f"W_{g}"]), np.asarray(weights[f"b_{g}"])
        if W.shape != (units, hx.shape[-1]):
            raise ShapeError(f"W_{g} has shape {W.shape}, expected {(units, hx.shape[-1])}")
        if b.shape != (units,):
            raise ShapeError(f"b_{g} has shape {b.shape}, expected {(units,)}")
        pre[g] = hx @ W.T + b
    f = sigmoid(pre["f"])
    i = sigmoid(pre["i"])
    c_hat = np.tanh(pre["c"])
    c_t = f * c_prev + i * c_hat
    o = sigmoid(pre["o"])
    h_t = o * np.tanh(c_t)
    return h_t, c_t


def init_params(units: int, n_inputs: int, rng: np.random.Generator) -> dict:
    bound = 1.0 / math.sqrt(units)
    return {
        "W": rng.uniform(-bound, bound, size=(4 * units, units + n_inputs)),
        "b": np.zeros(4 * units),
        # zero head: an all-zero target leaves every gradient at exactly zero
        "v": np.zeros(units),
        "c0": np.zeros(1),
    }


def split_gates(params: dict) -> dict:
    H = params["v"].shape[0]
    out = {}
    for k, g in enumerate(GATES):
        out[f"W_{g}"] = params["W"][k * H : (k + 1) * H]
        out[f"b_{g}"] = params["b"][k * H : (k + 1) * H]
    return out


def forward(params: dict, X: np.ndarray, keep: bool = False):
    """X is (batch, steps, inputs). Returns predictions and the tape for backward."""
    W, b = params["W"], params["b"]
    H = params["v"].shape[0]
    B, T, _ = X.shape
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    tape = []
    for t in range(T):
        hx = np.concatenate([h, X[:, t, :]], axis=1)
        z = hx @ W.T + b
        f = sigmoid(z[:, :H])
        i = sigmoid(z[:, H : 2 * H])
        g = np.tanh(z[:, 2 * H : 3 * H])
        o = sigmoid(z[:, 3 * H :])
        c_prev = c
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        if keep:
            tape.append((hx, f, i, g, o, c_prev, tc))
    y = h @ params["v"] + params["c0"][0]
    return y, (tape, h)


def loss_and_grads(params: dict, X: np.ndarray, y: np.ndarray):
    """Mean squared error and its gradient with respect to every parameter."""
    pred, (tape, h_last) = forward(params, X, keep=True)
    B = len(y)
    err = pred - y
    loss = float(err @ err / B)
    dpred = 2.0 * err / B
    W = params["W"]
    H = params["v"].shape[0]
    grads = {
        "v": h_last.T @ dpred,
        "c0": np.array([dpred.sum()]),
        "W": np.zeros_like(W),
        "b": np.zeros_like(params["b"]),
    }
    dh = np.outer(dpred, params["v"])
    dc = np.zeros_like(dh)
    for hx, f, i, g, o, c_prev, tc in reversed(tape):
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        df = dc * c_prev
        di = dc * g
        dg = dc * i
        dz = np.concatenate(
            [df * f * (1.0 - f), di * i * (1.0 - i), dg * (1.0 - g * g), do * o * (1.0 - o)], axis=1
        )
        grads["W"] += dz.T @ hx
        grads["b"] += dz.sum(axis=0)
        dhx = dz @ W
        dh = dhx[:, :H]
        dc = dc * f
    return loss, grads


class Adam:
    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def clip_grads(grads: dict, max_norm: float) -> float:
    norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def _windows(z: np.ndarray, ex: Optional[np.ndarray], window: int):
    """Inputs (samples, window, 1 + k) and next-step targets from transformed values."""
    n = len(z) - window
    idx = np.arange(window)[None, :] + np.arange(n)[:, None]
    X = z[idx][:, :, None]
    if ex is not None:
        X = np.concatenate([X, ex[idx]], axis=2)
    return X, z[window:]


def _prepare(values, exog, scale, ex_mean, ex_std):
    """Scaled log-differences and the covariates of the week each difference ends in."""
    z, _ = log_difference(clamp_counts(values))
    z = z / scale
    ex = None
    if exog is not None:
        ex = (np.asarray(exog, dtype=float)[1:] - ex_mean) / ex_std
    return z, ex


def lstm_fit(values, params: LstmParams, exog=None, seed: int = 0, warm_start: Optional[dict] = None) -> dict:
    """Train on log-differenced counts. Returns the fitted state dict."""
    x = np.asarray(values, dtype=float)
    if len(x) <= params.window + 1:
        raise InsufficientDataError(f"LSTM with window {params.window} needs more than {params.window + 1} values")
    if warm_start is not None:
        scale, ex_mean, ex_std = warm_start["scale"], warm_start.get("ex_mean"), warm_start.get("ex_std")
        weights = {k: warm_start[k].copy() for k in ("W", "b", "v", "c0")}
    else:
        z_raw, _ = log_difference(clamp_counts(x))
        sd = float(z_raw.std())
        scale = np.array([sd if sd > 0 else 1.0])
        ex_mean = ex_std = None
        if exog is not None:
            ex_arr = np.asarray(exog, dtype=float)
            ex_mean = ex_arr.mean(axis=0)
            ex_std = ex_arr.std(axis=0)
            ex_std[ex_std == 0] = 1.0
        n_inputs = 1 + (0 if exog is None else np.asarray(exog).shape[1])
        weights = init_params(params.units, n_inputs, np.random.default_rng(seed))

    z, ex = _prepare(x, exog, scale[0], ex_mean, ex_std)
    X, y = _windows(z, ex, params.window)
    rng = np.random.default_rng([seed, len(x)])
    opt = Adam(weights, params.learning_rate)
    history = []
    for epoch in range(1, params.epochs + 1):
        order = rng.permutation(len(y))
        total = 0.0
        for start in range(0, len(y), params.batch_size):
            batch = order[start : start + params.batch_size]
            loss, grads = loss_and_grads(weights, X[batch], y[batch])
            if not math.isfinite(loss):
                raise DivergenceError(
                    f"LSTM loss became non-finite in epoch {epoch} at learning rate {params.learning_rate}"
                )
            clip_grads(grads, params.clip_norm)
            opt.step(weights, grads)
            total += loss * len(batch)
        history.append(total / len(y))
    state = dict(weights)
    state["scale"] = scale
    state["loss_history"] = np.asarray(history)
    if ex_mean is not None:
        state["ex_mean"] = ex_mean
        state["ex_std"] = ex_std
    return state


def lstm_next(state: dict, values: np.ndarray, window: int, exog=None) -> float:
    """One-step forecast from the last ``window + 1`` values (and their covariate rows)."""
    x = np.asarray(values, dtype=float)[-(window + 1) :]
    ex = None if exog is None else np.asarray(exog, dtype=float)[-(window + 1) :]
    z, exs = _prepare(x, ex, state["scale"][0], state.get("ex_mean"), state.get("ex_std"))
    X = z[None, :, None]
    if exs is not None:
        X = np.concatenate([X, exs[None]], axis=2)
    pred, _ = forward(state, X)
    last = max(float(x[-1]), 1.0)
    return last * math.exp(float(pred[0]) * state["scale"][0])
