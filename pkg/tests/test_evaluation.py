import math
import warnings
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bugcast.errors import InsufficientDataError, ValidationError
from bugcast.evaluation import (
    PredictionTrace,
    SplitSpec,
    compare_models,
    compute_metrics,
    multi_horizon_evaluate,
    rolling_evaluate,
)
from bugcast.models import ArimaParams, ExpParams, ForecasterSpec

from conftest import weekly


def brute_metrics(actual, predicted):
    """Direct formulas, element by element."""
    n = len(actual)
    e = [a - p for a, p in zip(actual, predicted)]
    mean_a = sum(actual) / n
    sse = sum(v * v for v in e)
    sst = sum((a - mean_a) ** 2 for a in actual)
    abs_e = sorted(abs(v) for v in e)
    med = abs_e[n // 2] if n % 2 else 0.5 * (abs_e[n // 2 - 1] + abs_e[n // 2])
    mean_e = sum(e) / n
    return (
        math.sqrt(sse / n),
        1 - sse / sst,
        sum(abs(v) / a for v, a in zip(e, actual)) / n,
        med,
        math.sqrt(sum((v - mean_e) ** 2 for v in e) / n),
    )


def trace_of(actual, predicted):
    start = date(2015, 1, 5)
    from datetime import timedelta

    return PredictionTrace(tuple((start + timedelta(weeks=i), a, p) for i, (a, p) in enumerate(zip(actual, predicted))))


# --- metrics ----------------------------------------------------------------------


def test_metrics_hand_example():
    m = compute_metrics(trace_of([2, 4], [1, 5]))
    assert m.rmse == pytest.approx(1.0) and m.median_abs_error == pytest.approx(1.0)


def test_metrics_perfect():
    m = compute_metrics(trace_of([3, 5, 9], [3, 5, 9]))
    assert m.as_tuple() == (0.0, 1.0, 0.0, 0.0, 0.0)


def test_metrics_mean_prediction_r2_zero():
    a = [3.0, 5.0, 10.0]
    assert compute_metrics(trace_of(a, [6.0] * 3)).r_squared == pytest.approx(0.0, abs=1e-15)


def test_metrics_error_pct():
    assert compute_metrics(trace_of([100, 200], [90, 220])).error_pct == pytest.approx(0.10)


def test_metrics_constant_actuals_nan_r2():
    with pytest.warns(RuntimeWarning):
        m = compute_metrics(trace_of([5, 5, 5], [4, 5, 6]))
    assert math.isnan(m.r_squared)
    assert m.rmse == pytest.approx(math.sqrt(2 / 3))


def test_metrics_empty_rejected():
    with pytest.raises(ValidationError):
        compute_metrics(trace_of([], []))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 300), st.integers(0, 2**32 - 1))
def test_metrics_match_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(1, 600, size=n).astype(float)
    if np.ptp(a) == 0:
        a[0] += 1
    p = a + rng.normal(0, 40, size=n)
    got = compute_metrics(trace_of(a, p)).as_tuple()
    assert np.allclose(got, brute_metrics(list(a), list(p)), rtol=0, atol=1e-9)
    m = compute_metrics(trace_of(a, p))
    assert m.rmse**2 >= m.error_std**2 - 1e-9
    perm = rng.permutation(n)
    assert np.allclose(compute_metrics(trace_of(a[perm], p[perm])).as_tuple(), got, atol=1e-9)


# --- rolling ------------------------------------------------------------------------


def test_naive_rolling_hand_example():
    s = weekly([1, 2, 3, 4, 5])
    split = SplitSpec(s.week_starts[1], s.week_starts[4])
    tr = rolling_evaluate(ForecasterSpec("Naive"), s, None, split)
    assert list(tr.predicted) == [2, 3, 4]
    assert list(tr.actual) == [3, 4, 5]


def test_naive_rolling_alignment_bundled(mozilla):
    split = SplitSpec(mozilla.week_starts[0], mozilla.end)
    tr = rolling_evaluate(ForecasterSpec("Naive"), mozilla, None, split)
    assert len(tr) == len(mozilla) - 1
    assert np.array_equal(tr.predicted, mozilla.values[:-1])


def test_default_split_bounds(mozilla):
    split = SplitSpec(date(2017, 1, 30), date(2019, 12, 30))
    first, last = split.bounds(mozilla)
    assert mozilla.week_starts[first] == date(2017, 2, 6)
    assert last == len(mozilla) - 1
    assert mozilla.week_starts[first - 1].year == 2017 and mozilla.week_starts[first - 1].month == 1


def test_exp_fit_once_still_tracks_actuals():
    xs = [12, 15, 11, 19, 22, 18, 25, 24, 30, 28]
    s = weekly(xs)
    split = SplitSpec(s.week_starts[2], s.end, refit_interval=math.inf)
    tr = rolling_evaluate(ForecasterSpec("EXP", params=ExpParams(0.5)), s, None, split)
    expected = []
    f = xs[0]
    for t in range(len(xs)):
        if t >= 3:
            expected.append(f)
        f = 0.5 * xs[t] + 0.5 * f
    assert list(tr.predicted) == pytest.approx(expected)


def test_refit_interval_reuses_parameters(mozilla):
    split = SplitSpec(date(2017, 1, 30), date(2017, 6, 26), refit_interval=4)
    every = SplitSpec(date(2017, 1, 30), date(2017, 6, 26), refit_interval=1)
    a = rolling_evaluate(ForecasterSpec("ARIMA"), mozilla, None, split)
    b = rolling_evaluate(ForecasterSpec("ARIMA"), mozilla, None, every)
    assert a.predicted[0] == b.predicted[0]
    assert not np.array_equal(a.predicted, b.predicted)


def test_rolling_insufficient_history():
    s = weekly(range(1, 30))
    split = SplitSpec(s.week_starts[5], s.end)
    with pytest.raises(InsufficientDataError):
        rolling_evaluate(ForecasterSpec("ARIMA"), s, None, split)


def test_split_validation():
    with pytest.raises(ValidationError):
        SplitSpec(date(2018, 1, 1), date(2017, 1, 2))


# --- multi-horizon ---------------------------------------------------------------------


def test_naive_horizon_constant_forecast_and_monotone_error():
    xs = [100 + 3 * k for k in range(86)]
    s = weekly(xs)
    split = SplitSpec(s.week_starts[20], s.end)
    h = multi_horizon_evaluate(ForecasterSpec("Naive"), s, None, split, 13, 13)
    for origin, pairs in h.per_origin:
        preds = {p for _, p in pairs}
        assert len(preds) == 1
    cum = h.cumulative_error_pct
    assert len(cum) == 13
    assert all(b >= a for a, b in zip(cum, cum[1:]))


@pytest.mark.parametrize("spec", [ForecasterSpec("Naive"), ForecasterSpec("EXP"), ForecasterSpec("ARIMA")], ids=lambda s: s.label)
def test_horizon_one_stride_one_equals_rolling(spec, mozilla):
    split = SplitSpec(date(2017, 1, 30), date(2017, 12, 25))
    h = multi_horizon_evaluate(spec, mozilla, None, split, horizon=1, stride=1)
    tr = rolling_evaluate(spec, mozilla, None, split)
    assert [p for _, pairs in h.per_origin for _, p in pairs] == list(tr.predicted)
    restricted = compute_metrics(tr).error_pct
    assert h.cumulative_error_pct[0] == pytest.approx(restricted, abs=1e-12)


def test_horizon_origins_truncated_with_warning(mozilla):
    split = SplitSpec(date(2019, 6, 3), date(2019, 12, 30))
    with pytest.warns(RuntimeWarning, match="dropped"):
        h = multi_horizon_evaluate(ForecasterSpec("Naive"), mozilla, None, split)
    assert len(h.per_origin) == 2


def test_horizon_no_origin_left(mozilla):
    split = SplitSpec(date(2019, 11, 25), date(2019, 12, 30))
    with pytest.raises(InsufficientDataError), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        multi_horizon_evaluate(ForecasterSpec("Naive"), mozilla, None, split)


# --- comparison table ---------------------------------------------------------------------


def test_compare_exp_alpha_one_equals_base(mozilla):
    split = SplitSpec(date(2017, 1, 30), date(2019, 12, 30))
    t = compare_models([ForecasterSpec("EXP", params=ExpParams(1.0))], mozilla, None, split)
    assert t.labels == ["EXP", "Base"]
    assert t.reports["EXP"] == t.reports["Base"]


def test_compare_rejects_empty(mozilla):
    with pytest.raises(ValidationError):
        compare_models([], mozilla, None, SplitSpec(date(2017, 1, 30), date(2019, 12, 30)))


def test_compare_marks_best_and_annotates_failures(mozilla, mozilla_exog):
    split = SplitSpec(date(2017, 1, 30), date(2017, 12, 25))
    specs = [
        ForecasterSpec("WMA"),
        ForecasterSpec("ARIMA", params=ArimaParams(2, 0, 0)),
        ForecasterSpec("ARIMA", params=ArimaParams(300, 0, 0), label="ARIMA300"),
    ]
    t = compare_models(specs, mozilla, mozilla_exog, split)
    assert t.labels == ["WMA", "ARIMA", "ARIMA300", "Base"]
    assert "ARIMA300" in t.errors
    doc = t.to_dict()
    assert doc["rows"][2]["model"] == "ARIMA300" and "error" in doc["rows"][2]
    rmse = {lab: r.rmse for lab, r in t.reports.items()}
    assert doc["best"]["rmse"] == min(rmse, key=rmse.get)
    r2 = {lab: r.r_squared for lab, r in t.reports.items()}
    assert doc["best"]["r_squared"] == max(r2, key=r2.get)
