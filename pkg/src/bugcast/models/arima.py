"""AR(p) on d-times differenced data with optional regressors, fit by conditional least squares."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

from ..errors import InsufficientDataError, RankDeficiencyError
from .spec import ArimaParams


@dataclass(frozen=True)
class ArimaFit:
    intercept: float
    ar: np.ndarray
    beta: np.ndarray
    sigma2: float
    stderr: np.ndarray  # intercept, ar..., beta...

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([[self.intercept], self.ar, self.beta])


def difference(x: np.ndarray, d: int) -> np.ndarray:
    for _ in range(d):
        x = np.diff(x)
    return x


def arima_fit_css(values, params: ArimaParams, exog=None) -> ArimaFit:
    """Regress the differenced series on its own p lags plus covariates.

    Conditioning on the first p differenced values makes this ordinary least
    squares. ``exog`` rows align with ``values``; the row of the target week
    is used.
    """
    x = np.asarray(values, dtype=float)
    p, d = params.p, params.d
    w = difference(x, d)
    ex = None if exog is None else np.asarray(exog, dtype=float).reshape(len(x), -1)[d:]
    k_exog = 0 if ex is None else ex.shape[1]
    if len(w) <= p + k_exog + 2:
        raise InsufficientDataError(
            f"ARIMA({p},{d},0) with {k_exog} covariates needs more than {p + k_exog + 2 + d} values, got {len(x)}"
        )
    rows = np.arange(p, len(w))
    cols = [np.ones(len(rows))] + [w[rows - i] for i in range(1, p + 1)]
    if ex is not None:
        cols += [ex[rows, j] for j in range(k_exog)]
    X = np.column_stack(cols)
    z = w[rows]
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficiencyError(
            "ARIMA design matrix is rank deficient; a covariate is constant or duplicates another column"
        )
    coef, *_ = np.linalg.lstsq(X, z, rcond=None)
    resid = z - X @ coef
    dof = max(len(z) - X.shape[1], 1)
    sigma2 = float(resid @ resid / dof)
    stderr = np.sqrt(np.diag(sigma2 * np.linalg.inv(X.T @ X)))
    return ArimaFit(float(coef[0]), coef[1 : p + 1].copy(), coef[p + 1 :].copy(), sigma2, stderr)


def arima_next(fit: ArimaFit, values: np.ndarray, d: int, next_exog: Optional[np.ndarray] = None) -> float:
    w = difference(np.asarray(values, dtype=float), d)
    p = len(fit.ar)
    w_hat = fit.intercept + sum(fit.ar[i] * w[-1 - i] for i in range(p))
    if len(fit.beta):
        w_hat += float(np.dot(fit.beta, next_exog))
    # undo d differences: x_{n+1} = w_hat - sum_k C(d,k) (-1)^k x_{n+1-k}
    x = np.asarray(values, dtype=float)
    return float(w_hat - sum(comb(d, k) * (-1) ** k * x[-k] for k in range(1, d + 1)))
