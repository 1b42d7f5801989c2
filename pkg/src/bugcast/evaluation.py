"""Rolling-origin evaluation, 13-week horizon evaluation and the metric table."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from typing import Optional

import numpy as np

from ._io import csv_text
from .errors import BugcastError, InsufficientDataError, ValidationError
from .models import DEFAULT_REFIT, ForecasterSpec, fit, predict

log = logging.getLogger(__name__)

METRICS = ("rmse", "r_squared", "error_pct", "median_abs_error", "error_std")
_HIGHER_IS_BETTER = {"r_squared"}


@dataclass(frozen=True)
class SplitSpec:
    train_end: date
    test_end: date
    refit_interval: Optional[float] = None

    def __post_init__(self):
        if not self.train_end < self.test_end:
            raise ValidationError(f"train_end {self.train_end} must precede test_end {self.test_end}")
        if self.refit_interval is not None and not self.refit_interval >= 1:
            raise ValidationError("refit_interval must be at least 1")

    def bounds(self, series) -> tuple:
        """Index of the first test week and of the last test week."""
        return series.index_of(self.train_end) + 1, series.index_of(self.test_end)

    def refit_for(self, spec: ForecasterSpec) -> float:
        if spec.refit_interval is not None:
            return spec.refit_interval
        if self.refit_interval is not None:
            return self.refit_interval
        return DEFAULT_REFIT[spec.family]


@dataclass(frozen=True)
class PredictionTrace:
    rows: tuple
    model_label: str = ""

    @property
    def week_starts(self) -> list:
        return [r[0] for r in self.rows]

    @property
    def actual(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows], dtype=float)

    @property
    def predicted(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows], dtype=float)

    def __len__(self):
        return len(self.rows)

    def to_csv(self) -> str:
        return csv_text(
            ("week_start", "actual", "predicted"),
            [(d.isoformat(), _num(a), repr(float(p))) for d, a, p in self.rows],
        )


def _num(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    r_squared: float
    error_pct: float
    median_abs_error: float
    error_std: float
    mean_abs_error: float = float("nan")

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, m) for m in METRICS)

    def to_dict(self) -> dict:
        return {m: getattr(self, m) for m in METRICS + ("mean_abs_error",)}


def compute_metrics(trace) -> MetricsReport:
    """Score a trace. "MAE" in reports means the *median* absolute error."""
    if isinstance(trace, PredictionTrace):
        actual, predicted = trace.actual, trace.predicted
    else:
        actual, predicted = (np.asarray(a, dtype=float) for a in trace)
    if len(actual) == 0:
        raise ValidationError("cannot score an empty trace")
    if np.any(actual <= 0):
        raise ValidationError("error percentage needs strictly positive actuals")
    e = actual - predicted
    sse = float(e @ e)
    dev = actual - actual.mean()
    sst = float(dev @ dev)
    if sst == 0:
        warnings.warn("actuals are constant; R-squared is undefined", RuntimeWarning, stacklevel=2)
        r2 = float("nan")
    else:
        r2 = 1.0 - sse / sst
    ae = np.abs(e)
    return MetricsReport(
        rmse=math.sqrt(sse / len(e)),
        r_squared=r2,
        error_pct=float(np.mean(ae / actual)),
        median_abs_error=float(np.median(ae)),
        error_std=float(np.std(e)),
        mean_abs_error=float(np.mean(ae)),
    )


def _exog_array(exog):
    if exog is None:
        return None
    return np.asarray(getattr(exog, "array", exog), dtype=float)


def _check_history(spec, first_test):
    if first_test < spec.min_history:
        raise InsufficientDataError(
            f"{spec.label} needs {spec.min_history} weeks before the first forecast, only {first_test} available"
        )


def rolling_evaluate(spec: ForecasterSpec, series, exog, split: SplitSpec) -> PredictionTrace:
    """One-step-ahead walk forward over the test span.

    Before forecasting week t the model has seen every actual up to t-1. It is
    re-estimated every ``refit_interval`` steps and otherwise just conditioned
    on the newly observed weeks.
    """
    x = series.values
    ex = _exog_array(exog) if spec.use_exogenous else None
    if spec.use_exogenous and ex is None:
        raise ValidationError(f"{spec.label} needs covariates")
    first, last = split.bounds(series)
    _check_history(spec, first)
    refit = split.refit_for(spec)
    model = None
    rows = []
    for step, t in enumerate(range(first, last + 1)):
        if model is None or step % refit == 0:
            model = fit(spec, x[:t], None if ex is None else ex[:t], warm_start=model)
        elif len(model.history) < t:
            k = len(model.history)
            model = model.extend(x[k:t], None if ex is None else ex[k:t])
        yhat = predict(model, 1, None if ex is None else ex[t : t + 1])[0]
        rows.append((series.week_starts[t], x[t], yhat))
    return PredictionTrace(tuple(rows), spec.label)


@dataclass(frozen=True)
class HorizonTrace:
    per_origin: tuple  # (origin week, ((actual, predicted), ...))
    cumulative_error_pct: tuple
    model_label: str = ""

    @property
    def horizon(self) -> int:
        return len(self.cumulative_error_pct)

    @property
    def step_error_pct(self) -> tuple:
        pct = np.array([[abs(a - p) / a for a, p in pairs] for _, pairs in self.per_origin])
        return tuple(pct.mean(axis=0).tolist())

    def to_csv(self) -> str:
        return csv_text(
            ("step", "cumulative_error_pct"),
            [(k + 1, repr(float(v))) for k, v in enumerate(self.cumulative_error_pct)],
        )


def multi_horizon_evaluate(
    spec: ForecasterSpec, series, exog, split: SplitSpec, horizon: int = 13, stride: int = 13
) -> HorizonTrace:
    """Forecast ``horizon`` weeks from origins spaced ``stride`` weeks apart, with no feedback of actuals."""
    if horizon < 1 or stride < 1:
        raise ValidationError("horizon and stride must be positive")
    x = series.values
    ex = _exog_array(exog) if spec.use_exogenous else None
    if spec.use_exogenous and ex is None:
        raise ValidationError(f"{spec.label} needs covariates")
    first, last = split.bounds(series)
    _check_history(spec, first)
    starts = list(range(first, last + 1, stride))
    origins = [o for o in starts if o + horizon - 1 <= last]
    if len(origins) < len(starts):
        warnings.warn(
            f"{len(starts) - len(origins)} origin(s) dropped: fewer than {horizon} weeks remain after them",
            RuntimeWarning,
            stacklevel=2,
        )
    if not origins:
        raise InsufficientDataError(f"no origin in the test span leaves {horizon} weeks to score")
    per_origin = []
    for o in origins:
        # each origin is fitted from scratch so blocks stay independent
        model = fit(spec, x[:o], None if ex is None else ex[:o])
        preds = predict(model, horizon, None if ex is None else ex[o : o + horizon])
        per_origin.append((series.week_starts[o], tuple(zip(x[o : o + horizon].tolist(), preds))))
    pct = np.array([[abs(a - p) / a for a, p in pairs] for _, pairs in per_origin])
    cum = np.cumsum(pct.sum(axis=0)) / (len(origins) * np.arange(1, horizon + 1))
    return HorizonTrace(tuple(per_origin), tuple(cum.tolist()), spec.label)


@dataclass
class ComparisonTable:
    labels: list
    reports: dict
    traces: dict
    errors: dict = field(default_factory=dict)

    @property
    def best(self) -> dict:
        out = {}
        for m in METRICS:
            scored = [(lab, getattr(r, m)) for lab, r in self.reports.items() if not math.isnan(getattr(r, m))]
            if not scored:
                continue
            pick = max if m in _HIGHER_IS_BETTER else min
            out[m] = pick(scored, key=lambda kv: kv[1])[0]
        return out

    def to_dict(self) -> dict:
        rows = []
        for lab in self.labels:
            if lab in self.reports:
                rows.append({"model": lab, **self.reports[lab].to_dict()})
            else:
                rows.append({"model": lab, "error": self.errors[lab]})
        return {"metrics": list(METRICS), "rows": rows, "best": self.best}


def baseline_spec(seed: int = 0) -> ForecasterSpec:
    return ForecasterSpec("Naive", seed=seed)


def compare_models(specs, series, exog, split: SplitSpec, n_jobs: int = 1) -> ComparisonTable:
    """Evaluate each spec one step ahead and append the naive baseline row last."""
    specs = [s for s in specs if s.family != "Naive"]
    if not specs:
        raise ValidationError("compare_models needs at least one non-baseline model")
    specs.append(baseline_spec(specs[0].seed))
    labels = [s.label for s in specs]
    if len(set(labels)) != len(labels):
        raise ValidationError(f"model labels must be unique, got {labels}")

    def run(spec):
        try:
            return spec.label, rolling_evaluate(spec, series, exog, split), None
        except BugcastError as exc:
            log.error("%s failed: %s", spec.label, exc)
            return spec.label, None, str(exc)

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            results = list(pool.map(run, specs))
    else:
        results = [run(s) for s in specs]
    table = ComparisonTable(labels, {}, {})
    for label, trace, err in results:
        if trace is None:
            table.errors[label] = err
        else:
            table.traces[label] = trace
            table.reports[label] = compute_metrics(trace)
    return table
