"""``bugcast`` command line: fetch, diagnose, evaluate, forecast, report.

Exit codes: 0 success, 1 internal error, 2 I/O or network, 3 validation or
insufficient data.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

from . import bundled
from ._io import atomic_write_text, csv_text, write_json
from .config import load_config
from .diagnostics import acf, adf_test, pacf, suggest_orders
from .errors import AlignmentError, BugcastError, DataIOError, ValidationError
from .evaluation import METRICS, baseline_spec, compare_models, multi_horizon_evaluate
from .features import build_exogenous, exogenous_for_weeks
from .ingest import (
    aggregate_weekly,
    fetch_bug_counts,
    load_outlier_spec,
    load_release_calendar,
    load_series_csv,
    remove_outliers,
    save_series_csv,
)
from .models import fit, model_from_dict, model_to_dict, predict

log = logging.getLogger("bugcast")


# ---------------------------------------------------------------------------
# shared loading


def _calendar(cfg):
    if cfg.calendar in (None, "bundled"):
        return bundled.release_calendar() if cfg.calendar == "bundled" else None
    return load_release_calendar(cfg.resolve(cfg.calendar))


def _outliers(cfg, series):
    if cfg.outliers is None:
        return None
    if cfg.outliers == "bundled":
        spec = bundled.outlier_spec(series.label)
    else:
        spec = load_outlier_spec(cfg.resolve(cfg.outliers))
    for r in spec.removals:
        series.index_of(r.week_start)
    return spec


def _fetch(cfg):
    d = cfg.data
    records = fetch_bug_counts(d.endpoint, d.range, d.page_size, product=d.product)
    return aggregate_weekly(records, d.range, d.which)


def load_series(cfg, override=None):
    if override is not None:
        series = load_series_csv(override, cfg.data.which)
    elif cfg.data.source == "bundled":
        series = bundled.arrival_series()
    elif cfg.data.source == "csv":
        series = load_series_csv(cfg.resolve(cfg.data.path), cfg.data.which)
    else:
        series = _fetch(cfg)
    spec = _outliers(cfg, series)
    return remove_outliers(series, spec) if spec is not None else series


def _out(cfg, name) -> Path:
    return cfg.resolve(cfg.out_dir) / name


# ---------------------------------------------------------------------------
# subcommands


def cmd_fetch(cfg, args):
    d = cfg.data
    start = args.date_from or d.range[0]
    end = args.date_to or d.range[1]
    endpoint = args.endpoint or d.endpoint
    records = fetch_bug_counts(endpoint, (start, end), args.page_size or d.page_size, product=d.product)
    series = aggregate_weekly(records, (start, end), args.which or d.which)
    path = Path(args.output) if args.output else _out(cfg, "series.csv")
    save_series_csv(series, path)
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    logfile = path.with_name("fetch.log")
    prior = logfile.read_text(encoding="utf-8") if logfile.exists() else ""
    atomic_write_text(
        logfile,
        prior + f"{stamp} {endpoint or 'default'} {start}..{end} records={len(records)} weeks={len(series)}\n",
    )
    print(f"wrote {len(series)} weeks ({sum(series.counts)} bugs) to {path}")


def diagnose_report(series, max_lag: int, adf_max_lag=None) -> tuple:
    adf = adf_test(series, adf_max_lag)
    lags = min(max_lag, (len(series) - 1) // 2)
    if lags < 1:
        raise ValidationError(f"series of {len(series)} weeks is too short for a correlogram")
    a = acf(series, lags)
    p = pacf(series, lags)
    order = suggest_orders(a, p)
    doc = {
        "adf": adf.to_dict(),
        "acf": list(a.values),
        "pacf": list(p.values),
        "confidence_band": a.confidence_band,
        "suggested_orders": {"p": order[0], "q": order[1]},
    }
    rows = [(k, repr(a.values[k]), repr(p.values[k]), repr(a.confidence_band)) for k in range(lags + 1)]
    return doc, csv_text(("lag", "acf", "pacf", "band"), rows)


def cmd_diagnose(cfg, args):
    series = load_series(cfg, args.series)
    doc, table = diagnose_report(series, cfg.max_lag, cfg.adf_max_lag)
    write_json(_out(cfg, "diagnostics.json"), doc)
    atomic_write_text(_out(cfg, "correlogram.csv"), table)
    adf = doc["adf"]
    print(
        f"ADF statistic {adf['statistic']:.4f}, p-value {adf['p_value']:.4f} "
        f"(lag {adf['chosen_lag']}); suggested p={doc['suggested_orders']['p']}, q={doc['suggested_orders']['q']}"
    )


def _select(cfg, labels):
    if not labels:
        return list(cfg.models)
    by_label = {m.label: m for m in cfg.models}
    missing = [lab for lab in labels if lab not in by_label]
    if missing:
        raise ValidationError(f"unknown model label(s) {missing}; configured: {sorted(by_label)}")
    return [by_label[lab] for lab in labels]


def cmd_evaluate(cfg, args):
    series = load_series(cfg, args.series)
    calendar = _calendar(cfg)
    exog = build_exogenous(series, calendar)
    specs = _select(cfg, args.models)
    cfg.split.bounds(series)
    if args.dump_features:
        atomic_write_text(Path(args.dump_features), exog.to_csv())
    table = compare_models(specs, series, exog, cfg.split, n_jobs=cfg.jobs)
    doc = {"profile": cfg.name, "seed": cfg.seed, "split": {
        "train_end": cfg.split.train_end.isoformat(),
        "test_end": cfg.split.test_end.isoformat(),
    }, **table.to_dict()}
    horizons = {}
    if not args.no_horizon:
        for spec in [s for s in specs if s.family != "Naive"] + [baseline_spec(cfg.seed)]:
            if spec.label in table.errors:
                continue
            h = multi_horizon_evaluate(spec, series, exog, cfg.split, cfg.horizon, cfg.stride)
            horizons[spec.label] = h
        doc["horizon"] = {
            "steps": cfg.horizon,
            "stride": cfg.stride,
            "cumulative_error_pct": {lab: list(h.cumulative_error_pct) for lab, h in horizons.items()},
        }
    for lab, trace in table.traces.items():
        atomic_write_text(_out(cfg, f"trace_{lab}.csv"), trace.to_csv())
    for lab, h in horizons.items():
        atomic_write_text(_out(cfg, f"horizon_{lab}.csv"), h.to_csv())
    write_json(_out(cfg, "report.json"), doc)
    print(render_table(doc))
    if table.errors:
        for lab, err in table.errors.items():
            print(f"{lab} failed: {err}", file=sys.stderr)


def _future_exog(calendar, weeks, assume_no_releases):
    last_known = calendar.dates[-1] if calendar is not None and len(calendar) else None
    if not assume_no_releases and (last_known is None or last_known < weeks[-1]):
        raise AlignmentError(
            f"release calendar ends {last_known}; covariates for the weeks through {weeks[-1]} are unknown "
            "(extend the calendar or pass --assume-no-releases)"
        )
    return exogenous_for_weeks(weeks, calendar)


def cmd_forecast(cfg, args):
    calendar = _calendar(cfg)
    if args.model_file:
        path = Path(args.model_file)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise ValidationError(f"{path} is not valid JSON: {exc}") from exc
        model = model_from_dict(doc)
        if not doc.get("history_end"):
            raise ValidationError(f"{path} lacks history_end; cannot date the forecast")
        end = date.fromisoformat(doc["history_end"])
    else:
        series = load_series(cfg, args.series)
        spec = _select(cfg, [args.model] if args.model else None)[0]
        exog = build_exogenous(series, calendar) if spec.use_exogenous else None
        model = fit(spec, series, exog)
        end = series.end
    weeks = [end + timedelta(weeks=k + 1) for k in range(args.horizon)]
    future = _future_exog(calendar, weeks, args.assume_no_releases) if model.spec.use_exogenous else None
    preds = predict(model, args.horizon, future)
    out = Path(args.output) if args.output else _out(cfg, f"forecast_{model.spec.label}.csv")
    atomic_write_text(out, csv_text(("week_start", "predicted"), [(w.isoformat(), repr(p)) for w, p in zip(weeks, preds)]))
    if args.save_model:
        doc = model_to_dict(model)
        doc["history_end"] = end.isoformat()
        write_json(Path(args.save_model), doc)
    for w, p in zip(weeks, preds):
        print(f"{w.isoformat()}  {p:8.2f}")


def render_table(doc) -> str:
    names = {"rmse": "RMSE", "r_squared": "R-squared", "error_pct": "Error (%)", "median_abs_error": "MAE", "error_std": "Std"}
    best = doc.get("best", {})
    header = f"{'Method':<8}" + "".join(f"{names[m]:>12}" for m in METRICS)
    lines = [header, "-" * len(header)]
    for row in doc["rows"]:
        if "error" in row:
            lines.append(f"{row['model']:<8}  failed: {row['error']}")
            continue
        cells = []
        for m in METRICS:
            v = row[m]
            txt = "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else (f"{v:.3f}" if m in ("r_squared", "error_pct") else f"{v:.2f}")
            cells.append(f"{txt + ('*' if best.get(m) == row['model'] else ''):>12}")
        lines.append(f"{row['model']:<8}" + "".join(cells))
    lines.append("* best value per metric; MAE is the median absolute error")
    return "\n".join(lines)


def render_markdown(doc) -> str:
    names = ["RMSE", "R-squared", "Error (%)", "MAE", "Std"]
    out = ["| Method | " + " | ".join(names) + " |", "|---" * (len(names) + 1) + "|"]
    best = doc.get("best", {})
    for row in doc["rows"]:
        if "error" in row:
            out.append(f"| {row['model']} | " + " | ".join(["failed"] * len(names)) + " |")
            continue
        cells = []
        for m in METRICS:
            v = row[m]
            txt = f"{v:.3f}" if m in ("r_squared", "error_pct") else f"{v:.2f}"
            cells.append(f"**{txt}**" if best.get(m) == row["model"] else txt)
        out.append(f"| {row['model']} | " + " | ".join(cells) + " |")
    h = doc.get("horizon")
    if h:
        out += ["", f"Cumulative absolute error percentage over {h['steps']} weeks:", ""]
        out.append("| Method | step 1 | step " + str(h["steps"]) + " | ratio |")
        out.append("|---|---|---|---|")
        for lab, cum in h["cumulative_error_pct"].items():
            out.append(f"| {lab} | {cum[0]:.3f} | {cum[-1]:.3f} | {cum[-1] / cum[0]:.2f} |")
    return "\n".join(out) + "\n"


def cmd_report(cfg, args):
    src = Path(args.report) if args.report else _out(cfg, "report.json")
    if not src.exists():
        raise DataIOError(f"{src} not found; run `bugcast evaluate` first")
    doc = json.loads(src.read_text(encoding="utf-8"))
    atomic_write_text(src.with_name("report.md"), render_markdown(doc))
    print(render_table(doc))


# ---------------------------------------------------------------------------


def _iso(text):
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run config or bundled profile name (default: mozilla-2010-2019)")
    common.add_argument("--seed", type=int, help="override the seed of every model")
    common.add_argument("--out-dir", help="directory for output files")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="bugcast", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", parents=[common], help="download bug records and write a weekly series CSV")
    p.add_argument("--from", dest="date_from", type=_iso)
    p.add_argument("--to", dest="date_to", type=_iso)
    p.add_argument("--endpoint")
    p.add_argument("--page-size", type=int)
    p.add_argument("--which", choices=("arrival", "resolved"))
    p.add_argument("--output")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("diagnose", parents=[common], help="ADF test and correlograms")
    p.add_argument("--series", help="series CSV instead of the configured source")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("evaluate", parents=[common], help="rolling evaluation of the configured models")
    p.add_argument("--series")
    p.add_argument("--models", nargs="+", metavar="LABEL", help="subset of configured model labels")
    p.add_argument("--dump-features", metavar="PATH", help="write the covariate matrix as CSV")
    p.add_argument("--no-horizon", action="store_true", help="skip the multi-week evaluation")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("forecast", parents=[common], help="forecast the weeks after the series ends")
    p.add_argument("--series")
    p.add_argument("--model", metavar="LABEL", help="configured model label (default: first configured)")
    p.add_argument("--model-file", help="fitted model JSON to forecast from")
    p.add_argument("--save-model", metavar="PATH", help="write the fitted model JSON")
    p.add_argument("--horizon", type=int, default=13)
    p.add_argument("--assume-no-releases", action="store_true", help="treat weeks past the calendar as release-free")
    p.add_argument("--output")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("report", parents=[common], help="render report.json as a table (stdout and report.md)")
    p.add_argument("--report", help="path to report.json")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out_dir)
        if getattr(args, "horizon", 1) < 1:
            raise ValidationError("--horizon must be positive")
        args.func(cfg, args)
    except BugcastError as exc:
        print(f"bugcast {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"bugcast {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"bugcast {args.command}: internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
