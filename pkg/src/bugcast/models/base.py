"""Uniform fit / predict surface over all forecaster families."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import AlignmentError, InsufficientDataError, ValidationError
from ..features import build_lag_matrix
from . import smoothing
from .arima import arima_fit_css, arima_next
from .forest import rf_fit
from .lstm import lstm_fit, lstm_next
from .spec import ForecasterSpec


@dataclass(frozen=True)
class FittedModel:
    """Fitted parameters plus the history the next forecast conditions on.

    ``state`` is family specific: ArimaFit, Forest, a dict of LSTM arrays, or
    None for the parameter-free families.
    """

    spec: ForecasterSpec
    state: object
    history: np.ndarray
    history_exog: Optional[np.ndarray] = None

    def extend(self, values, exog_rows=None) -> "FittedModel":
        """Condition on newly observed weeks without re-estimating anything."""
        values = np.asarray(values, dtype=float).reshape(-1)
        hist = np.concatenate([self.history, values])
        ex = self.history_exog
        if self.spec.use_exogenous:
            rows = _as_rows(exog_rows, len(values))
            ex = np.vstack([ex, rows])
        return replace(self, history=hist, history_exog=ex)

    def next_value(self, values: np.ndarray, exog: Optional[np.ndarray], next_exog: Optional[np.ndarray]) -> float:
        spec, p = self.spec, self.spec.params
        fam = spec.family
        if fam == "Naive":
            return smoothing.naive_next(values)
        if fam == "EXP":
            return smoothing.exp_next(values, p.alpha)
        if fam == "WMA":
            return smoothing.wma_next(values, p.effective_weights)
        if fam == "ARIMA":
            return arima_next(self.state, values, p.d, next_exog)
        if fam == "RF":
            row = values[::-1][: p.lag_count]
            if next_exog is not None:
                row = np.concatenate([row, next_exog])
            return float(self.state.predict(row[None, :])[0])
        if fam == "LSTM":
            # per-timestep covariates cover observed weeks only
            ex = None if exog is None else exog[:-1]
            return lstm_next(self.state, values, p.window, ex)
        raise ValidationError(f"unknown family {fam}")


def _as_rows(exog, n: int) -> np.ndarray:
    if exog is None:
        raise AlignmentError(f"model uses covariates but none were supplied for {n} week(s)")
    arr = np.asarray(getattr(exog, "array", exog), dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if len(arr) != n:
        raise AlignmentError(f"expected {n} covariate row(s), got {len(arr)}")
    return arr


def _values(series) -> np.ndarray:
    return np.asarray(getattr(series, "values", series), dtype=float).reshape(-1)


def fit(spec: ForecasterSpec, series, exog=None, warm_start: Optional[FittedModel] = None) -> FittedModel:
    x = _values(series)
    if len(x) < spec.min_history:
        raise InsufficientDataError(
            f"{spec.label} needs at least {spec.min_history} weeks of history, got {len(x)}"
        )
    ex = None
    if spec.use_exogenous:
        ex = _as_rows(exog, len(x))
    elif exog is not None:
        raise AlignmentError(f"{spec.label} does not use covariates but some were supplied")

    p = spec.params
    state = None
    if spec.family == "ARIMA":
        state = arima_fit_css(x, p, ex)
    elif spec.family == "RF":
        state = rf_fit(build_lag_matrix(x, p.lag_count, ex), p, seed=spec.seed)
    elif spec.family == "LSTM":
        warm = None
        if warm_start is not None and warm_start.spec.family == "LSTM":
            warm = warm_start.state
        state = lstm_fit(x, p, ex, seed=spec.seed, warm_start=warm)
    return FittedModel(spec, state, x.copy(), ex)


def predict(model: FittedModel, horizon: int, future_exog=None) -> list:
    """Recursive multi-step forecast; each prediction is clamped at zero and fed back."""
    if horizon < 1:
        raise ValidationError("horizon must be positive")
    future = None
    if model.spec.use_exogenous:
        future = _as_rows(future_exog, horizon)
    values = model.history.copy()
    exog = model.history_exog
    out = []
    for k in range(horizon):
        next_ex = None if future is None else future[k]
        hist_ex = None if exog is None else np.vstack([exog, next_ex[None, :]])
        yhat = max(0.0, model.next_value(values, hist_ex, next_ex))
        out.append(yhat)
        values = np.append(values, yhat)
        exog = hist_ex
    return out
