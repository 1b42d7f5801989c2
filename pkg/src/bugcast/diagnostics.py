"""Stationarity test and correlograms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DegenerateRegressionError, InsufficientDataError, ValidationError

# MacKinnon (1994) response surface, one variable, constant-only regression.
_TAU_MAX = 2.74
_TAU_MIN = -18.83
_TAU_STAR = -1.61
_SMALLP = (2.1659, 1.4412, 0.038269)
_LARGEP = (1.7339, 0.93202, -0.12745, -0.010368)
# MacKinnon (2010) finite-sample critical values, constant-only.
_CRIT = {
    "1%": (-3.43035, -6.5393, -16.786, -79.433),
    "5%": (-2.86154, -2.8903, -4.234, -40.040),
    "10%": (-2.56677, -1.5384, -2.809, 0.0),
}


def _as_array(series) -> np.ndarray:
    values = getattr(series, "values", series)
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError("expected a one-dimensional series")
    return arr


def mackinnon_pvalue(stat: float) -> float:
    """Approximate p-value of a constant-only ADF statistic."""
    if stat > _TAU_MAX:
        return 1.0
    if stat < _TAU_MIN:
        return 0.0
    coef = _SMALLP if stat <= _TAU_STAR else _LARGEP
    return float(norm.cdf(sum(c * stat**i for i, c in enumerate(coef))))


def mackinnon_crit(nobs: int) -> dict:
    return {k: float(sum(c / nobs**i for i, c in enumerate(cs))) for k, cs in _CRIT.items()}


def schwert_max_lag(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    p_value: float
    chosen_lag: int
    n_obs_used: int
    critical_values: dict
    reject_at_5pct: bool

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "chosen_lag": self.chosen_lag,
            "n_obs_used": self.n_obs_used,
            "critical_values": dict(self.critical_values),
            "reject_at_5pct": self.reject_at_5pct,
        }


def _adf_design(y: np.ndarray, lag: int, first: int):
    """Rows t = first..n-1 of [1, y_{t-1}, dy_{t-1}, ..., dy_{t-lag}] and dy_t."""
    dy = np.diff(y)
    # dy[t-1] = y[t] - y[t-1]
    rows = np.arange(first, len(y))
    cols = [np.ones(len(rows)), y[rows - 1]]
    cols += [dy[rows - 1 - i] for i in range(1, lag + 1)]
    return np.column_stack(cols), dy[rows - 1]


def _ols(X, z):
    coef, _, rank, _ = np.linalg.lstsq(X, z, rcond=None)
    if rank < X.shape[1]:
        raise DegenerateRegressionError("ADF regression is rank deficient (constant series?)")
    resid = z - X @ coef
    return coef, float(resid @ resid)


def adf_test(series, max_lag: int | None = None) -> AdfResult:
    """Augmented Dickey-Fuller test with a constant, lag length chosen by AIC.

    Every candidate lag is scored on the common sample that the largest lag
    allows; the chosen lag is then refit on all rows it can use.
    """
    y = _as_array(series)
    n = len(y)
    if max_lag is None:
        max_lag = schwert_max_lag(n)
    if max_lag < 0:
        raise ValidationError("max_lag must be non-negative")
    if n < max_lag + 10:
        raise InsufficientDataError(f"ADF with max_lag={max_lag} needs at least {max_lag + 10} observations, got {n}")
    if np.ptp(y) == 0:
        raise DegenerateRegressionError("ADF regression is degenerate for a constant series")

    first = max_lag + 1
    best_lag, best_aic = 0, math.inf
    for lag in range(max_lag + 1):
        X, z = _adf_design(y, lag, first)
        _, ssr = _ols(X, z)
        nobs = len(z)
        aic = nobs * math.log(ssr / nobs) + 2 * X.shape[1]
        if aic < best_aic - 1e-12:
            best_lag, best_aic = lag, aic

    X, z = _adf_design(y, best_lag, best_lag + 1)
    coef, ssr = _ols(X, z)
    nobs, k = X.shape
    sigma2 = ssr / (nobs - k)
    cov = sigma2 * np.linalg.inv(X.T @ X)
    stat = float(coef[1] / math.sqrt(cov[1, 1]))
    p = mackinnon_pvalue(stat)
    return AdfResult(stat, p, best_lag, nobs, mackinnon_crit(nobs), p < 0.05)


@dataclass(frozen=True)
class Correlogram:
    kind: str
    values: tuple
    confidence_band: float

    @property
    def max_lag(self) -> int:
        return len(self.values) - 1

    def outside_band(self) -> list:
        return [k for k in range(1, len(self.values)) if abs(self.values[k]) > self.confidence_band]


def _acf_values(x: np.ndarray, max_lag: int) -> np.ndarray:
    d = x - x.mean()
    denom = d @ d
    if denom == 0:
        raise DegenerateRegressionError("autocorrelation is undefined for a constant series")
    out = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        out[k] = (d[: len(d) - k] @ d[k:]) / denom
    out[0] = 1.0
    return out


def acf(series, max_lag: int) -> Correlogram:
    x = _as_array(series)
    n = len(x)
    if max_lag < 1 or max_lag >= n:
        raise ValidationError(f"max_lag must lie in 1..{n - 1}, got {max_lag}")
    return Correlogram("ACF", tuple(_acf_values(x, max_lag).tolist()), 1.96 / math.sqrt(n))


def durbin_levinson(r: np.ndarray) -> np.ndarray:
    """Partial autocorrelations from autocorrelations r[0..m] (r[0] == 1)."""
    m = len(r) - 1
    out = np.zeros(m + 1)
    out[0] = 1.0
    if m == 0:
        return out
    phi = np.zeros(m + 1)
    phi[1] = r[1]
    out[1] = r[1]
    v = 1.0 - r[1] ** 2
    for k in range(2, m + 1):
        if v <= 0:
            break
        kk = (r[k] - phi[1:k] @ r[k - 1 : 0 : -1]) / v
        prev = phi[1:k].copy()
        phi[1:k] = prev - kk * prev[::-1]
        phi[k] = kk
        out[k] = kk
        v *= 1.0 - kk**2
    return out


def pacf(series, max_lag: int) -> Correlogram:
    x = _as_array(series)
    n = len(x)
    if max_lag < 1 or max_lag >= n / 2:
        raise ValidationError(f"max_lag must lie in 1..{(n - 1) // 2}, got {max_lag}")
    r = _acf_values(x, max_lag)
    return Correlogram("PACF", tuple(durbin_levinson(r).tolist()), 1.96 / math.sqrt(n))


def _cutoff(gram: Correlogram, run: int = 3):
    """Last significant lag before ``run`` quiet lags in a row; None if it never goes quiet."""
    last_out, inside = 0, 0
    for k in range(1, len(gram.values)):
        if abs(gram.values[k]) > gram.confidence_band:
            last_out, inside = k, 0
        else:
            inside += 1
            if inside >= run:
                return last_out
    return None


def suggest_orders(acf_gram: Correlogram, pacf_gram: Correlogram) -> tuple:
    """Advisory (p, q) read off the correlograms.

    A correlogram "cuts off" at the last significant lag before three quiet
    lags in a row. When one function cuts off earlier than the other, the
    other is treated as tailing off and its order is zero.
    """
    p, q = _cutoff(pacf_gram), _cutoff(acf_gram)
    if p is None and q is None:
        return 0, 0
    if q is None or (p is not None and p < q):
        return p, 0
    if p is None or q < p:
        return 0, q
    return p, q
