import math

import numpy as np
import pytest

from bugcast.errors import ShapeError
from bugcast.models import ForecasterSpec, LstmParams, fit, lstm_cell_step, lstm_fit, predict
from bugcast.models.lstm import forward, init_params, loss_and_grads, split_gates


def zero_weights(units, n_in):
    w = {}
    for g in "fico":
        w[f"W_{g}"] = np.zeros((units, units + n_in))
        w[f"b_{g}"] = np.zeros(units)
    return w


def sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def test_cell_all_zero():
    h, c = lstm_cell_step([0.7, -2.0], np.zeros(3), np.zeros(3), zero_weights(3, 2))
    assert np.all(h == 0) and np.all(c == 0)


def test_cell_zero_weights_halve_memory():
    c_prev = np.array([1.5, -0.4, 3.0])
    h, c = lstm_cell_step([0.3], np.zeros(3), c_prev, zero_weights(3, 1))
    assert np.allclose(c, 0.5 * c_prev, atol=1e-15)
    assert np.allclose(h, 0.5 * np.tanh(0.5 * c_prev), atol=1e-15)


def test_cell_matches_scalar_hand_evaluation():
    rng = np.random.default_rng(123)
    w = {}
    for g in "fico":
        w[f"W_{g}"] = rng.normal(size=(1, 2))
        w[f"b_{g}"] = rng.normal(size=1)
    x, h_prev, c_prev = 0.37, -0.52, 0.81

    def gate(g):
        return w[f"W_{g}"][0, 0] * h_prev + w[f"W_{g}"][0, 1] * x + w[f"b_{g}"][0]

    f = sig(gate("f"))
    i = sig(gate("i"))
    c_hat = math.tanh(gate("c"))
    c_t = f * c_prev + i * c_hat
    o = sig(gate("o"))
    h_t = o * math.tanh(c_t)
    h, c = lstm_cell_step([x], [h_prev], [c_prev], w)
    assert abs(h[0] - h_t) < 1e-12 and abs(c[0] - c_t) < 1e-12


def test_cell_shape_error_names_matrix():
    w = zero_weights(2, 1)
    w["W_o"] = np.zeros((2, 4))
    with pytest.raises(ShapeError, match="W_o"):
        lstm_cell_step([0.1], np.zeros(2), np.zeros(2), w)


def test_batched_forward_matches_cell_steps():
    rng = np.random.default_rng(4)
    params = init_params(3, 2, rng)
    params["v"] = rng.normal(size=3)
    params["c0"] = np.array([0.2])
    X = rng.normal(size=(2, 4, 2))
    pred, _ = forward(params, X)
    gates = split_gates(params)
    for b in range(2):
        h = np.zeros(3)
        c = np.zeros(3)
        for t in range(4):
            h, c = lstm_cell_step(X[b, t], h, c, gates)
        assert abs(pred[b] - (h @ params["v"] + 0.2)) < 1e-12


def gradient_check(n_in):
    rng = np.random.default_rng(2024 + n_in)
    params = init_params(2, n_in, rng)
    params["W"] = rng.normal(scale=0.8, size=params["W"].shape)
    params["b"] = rng.normal(scale=0.5, size=params["b"].shape)
    params["v"] = rng.normal(size=2)
    params["c0"] = rng.normal(size=1)
    X = rng.normal(size=(5, 3, n_in))
    y = rng.normal(size=5)
    _, grads = loss_and_grads(params, X, y)
    worst = 0.0
    step = 1e-5
    for name, arr in params.items():
        for idx in np.ndindex(arr.shape):
            keep = arr[idx]
            arr[idx] = keep + step
            up, _ = loss_and_grads(params, X, y)
            arr[idx] = keep - step
            down, _ = loss_and_grads(params, X, y)
            arr[idx] = keep
            num = (up - down) / (2 * step)
            ana = grads[name][idx]
            rel = abs(ana - num) / max(abs(ana), abs(num), 1e-8)
            worst = max(worst, rel)
    return worst


@pytest.mark.parametrize("n_in", [1, 3])
def test_gradient_check_two_units_window_three(n_in):
    assert gradient_check(n_in) < 1e-4


def test_training_reduces_loss_on_sine():
    rng = np.random.default_rng(0)
    t = np.arange(500)
    x = 100 + 40 * np.sin(2 * np.pi * t / 26) + rng.normal(0, 1, 500)
    state = lstm_fit(x, LstmParams(units=16, epochs=30, window=13, learning_rate=5e-3), seed=1)
    hist = state["loss_history"]
    assert hist[-1] < 0.25 * hist[0]


def test_constant_series_forecasts_constant():
    spec = ForecasterSpec("LSTM", params=LstmParams(units=4, epochs=3, window=5))
    m = fit(spec, np.full(40, 120.0))
    assert predict(m, 5) == [120.0] * 5


def test_warm_start_continues_from_previous_weights():
    x = 100 + 30 * np.sin(np.arange(120) / 4.0)
    spec = ForecasterSpec("LSTM", params=LstmParams(units=4, epochs=2, window=5), seed=3)
    first = fit(spec, x[:100])
    warm = fit(spec, x[:104], warm_start=first)
    cold = fit(spec, x[:104])
    assert not np.array_equal(warm.state["W"], cold.state["W"])
    assert warm.state["scale"][0] == first.state["scale"][0]
