"""Calendar covariates, supervised lag matrices and the log-difference transform."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import timedelta
from typing import Optional, Sequence

import numpy as np

from ._io import csv_text
from .errors import InsufficientDataError, TransformDomainError, ValidationError

EXOG_COLUMNS = ("branch_release", "week_of_month", "month_of_year", "year")


def week_of_month(d) -> int:
    return 1 + (d.day - 1) // 7


def exog_row(week_start, release_dates: Sequence) -> tuple:
    end = week_start + timedelta(days=6)
    released = any(week_start <= r <= end for r in release_dates)
    return (int(released), week_of_month(week_start), week_start.month, week_start.year)


@dataclass(frozen=True)
class ExogenousMatrix:
    week_starts: tuple
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "week_starts", tuple(self.week_starts))
        object.__setattr__(self, "rows", tuple(tuple(int(v) for v in r) for r in self.rows))
        if len(self.rows) != len(self.week_starts):
            raise ValidationError("exogenous rows and week_starts differ in length")

    def __len__(self):
        return len(self.rows)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=float).reshape(len(self.rows), len(EXOG_COLUMNS))

    def column(self, name: str) -> list:
        j = EXOG_COLUMNS.index(name)
        return [r[j] for r in self.rows]

    def head(self, n: int) -> "ExogenousMatrix":
        return ExogenousMatrix(self.week_starts[:n], self.rows[:n])

    def to_csv(self) -> str:
        return csv_text(("week_start",) + EXOG_COLUMNS, [(d.isoformat(),) + r for d, r in zip(self.week_starts, self.rows)])


def build_exogenous(series, calendar) -> ExogenousMatrix:
    return exogenous_for_weeks(series.week_starts, calendar)


def exogenous_for_weeks(week_starts: Sequence, calendar) -> ExogenousMatrix:
    """Covariates for arbitrary week starts, e.g. the weeks after the series ends."""
    dates = sorted(calendar.dates) if calendar is not None else []
    return ExogenousMatrix(tuple(week_starts), tuple(exog_row(w, dates) for w in week_starts))


@dataclass(frozen=True)
class LagMatrix:
    """Row t holds target x[t], lags x[t-1]..x[t-L] and the target week's covariates."""

    targets: np.ndarray
    lags: np.ndarray
    exog: Optional[np.ndarray] = None

    @property
    def lag_count(self) -> int:
        return self.lags.shape[1]

    def __len__(self):
        return len(self.targets)

    @property
    def features(self) -> np.ndarray:
        if self.exog is None:
            return self.lags
        return np.hstack([self.lags, self.exog])

    @property
    def rows(self) -> list:
        out = []
        for i in range(len(self)):
            ex = tuple(self.exog[i].tolist()) if self.exog is not None else None
            out.append((float(self.targets[i]), self.lags[i].tolist(), ex))
        return out


def build_lag_matrix(values, lag_count: int, exog=None) -> LagMatrix:
    x = np.asarray(values, dtype=float)
    n = len(x)
    if lag_count < 1:
        raise ValidationError("lag_count must be at least 1")
    if lag_count >= n:
        raise InsufficientDataError(f"{lag_count} lags need more than {lag_count} values, got {n}")
    lags = np.column_stack([x[lag_count - j : n - j] for j in range(1, lag_count + 1)])
    ex = None
    if exog is not None:
        ex = np.asarray(getattr(exog, "array", exog), dtype=float)
        if len(ex) != n:
            raise ValidationError(f"exogenous matrix has {len(ex)} rows for {n} values")
        ex = ex[lag_count:]
    return LagMatrix(x[lag_count:].copy(), lags, ex)


@dataclass(frozen=True)
class TransformState:
    first_value: float
    kind: str = "log-difference"


def log_difference(values):
    """Return (ln x[i+1] - ln x[i] for each i, state). Zero counts must go through clamp_counts first."""
    x = np.asarray(values, dtype=float)
    if len(x) == 0:
        raise ValidationError("cannot transform an empty series")
    bad = np.flatnonzero(~(x > 0))
    if len(bad):
        i = int(bad[0])
        raise TransformDomainError(f"log-difference needs positive values; index {i} is {x[i]}")
    logs = np.log(x)
    return np.diff(logs), TransformState(float(x[0]))


def inverse_log_difference(transformed, state: TransformState) -> np.ndarray:
    z = np.asarray(transformed, dtype=float)
    logs = math.log(state.first_value) + np.concatenate([[0.0], np.cumsum(z)])
    return np.exp(logs)


def clamp_counts(values) -> np.ndarray:
    """Lift counts to at least 1 so the log transform is defined."""
    return np.maximum(np.asarray(values, dtype=float), 1.0)
