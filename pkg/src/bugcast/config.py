"""Run configuration: one YAML document, validated before anything runs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Optional

import yaml

from .bundled import profile_path
from .errors import DataIOError, ValidationError
from .evaluation import SplitSpec
from .models import ForecasterSpec

DEFAULT_PROFILE = "mozilla-2010-2019"


def _date(value, where) -> date:
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise ValidationError(f"{where}: expected a YYYY-MM-DD date, got {value!r}")


def _refit(value, where):
    if value is None:
        return None
    if isinstance(value, str) and value.lower() in ("inf", "infinity", "never"):
        return math.inf
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: refit_interval must be a positive integer or 'inf'")
    if value < 1:
        raise ValidationError(f"{where}: refit_interval must be at least 1")
    return value if math.isinf(value) else int(value)


@dataclass
class DataSource:
    source: str = "bundled"
    path: Optional[Path] = None
    endpoint: Optional[str] = None
    product: Optional[str] = None
    range: tuple = (date(2010, 1, 1), date(2019, 12, 31))
    page_size: int = 1000
    which: str = "arrival"


@dataclass
class RunConfig:
    name: str
    data: DataSource
    calendar: Optional[str]
    outliers: Optional[str]
    split: SplitSpec
    models: list
    out_dir: Path
    seed: int = 0
    jobs: int = 1
    horizon: int = 13
    stride: int = 13
    max_lag: int = 20
    adf_max_lag: Optional[int] = None
    base_dir: Path = field(default_factory=Path.cwd)

    def resolve(self, path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _section(doc, key):
    value = doc.get(key) or {}
    if not isinstance(value, dict):
        raise ValidationError(f"'{key}' must be a mapping")
    return value


def parse_config(doc: dict, base_dir: Path = None, seed: Optional[int] = None, out_dir=None) -> RunConfig:
    if not isinstance(doc, dict):
        raise ValidationError("config must be a mapping at the top level")
    known = {"name", "seed", "jobs", "out_dir", "data", "calendar", "outliers", "split", "horizon", "diagnostics", "models"}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    base_dir = Path(base_dir or Path.cwd())
    run_seed = int(seed if seed is not None else doc.get("seed", 0))

    d = _section(doc, "data")
    src = d.get("source", "bundled")
    if src not in ("bundled", "csv", "endpoint"):
        raise ValidationError(f"data.source must be bundled, csv or endpoint, got {src!r}")
    if src == "csv" and not d.get("path"):
        raise ValidationError("data.path is required when data.source = csv")
    rng = d.get("range", [date(2010, 1, 1), date(2019, 12, 31)])
    if not isinstance(rng, (list, tuple)) or len(rng) != 2:
        raise ValidationError("data.range must be [start, end]")
    rng = (_date(rng[0], "data.range"), _date(rng[1], "data.range"))
    if rng[1] < rng[0]:
        raise ValidationError("data.range ends before it starts")
    data = DataSource(
        source=src,
        path=Path(d["path"]) if d.get("path") else None,
        endpoint=d.get("endpoint"),
        product=d.get("product"),
        range=rng,
        page_size=int(d.get("page_size", 1000)),
        which=d.get("which", "arrival"),
    )
    if data.which not in ("arrival", "resolved"):
        raise ValidationError("data.which must be arrival or resolved")
    if data.page_size < 1:
        raise ValidationError("data.page_size must be positive")

    s = _section(doc, "split")
    if "train_end" not in s or "test_end" not in s:
        raise ValidationError("split needs train_end and test_end")
    split = SplitSpec(
        _date(s["train_end"], "split.train_end"),
        _date(s["test_end"], "split.test_end"),
        _refit(s.get("refit_interval"), "split"),
    )

    models = []
    raw_models = doc.get("models") or []
    if not isinstance(raw_models, list) or not raw_models:
        raise ValidationError("models must be a non-empty list")
    for i, m in enumerate(raw_models):
        if not isinstance(m, dict):
            raise ValidationError(f"models[{i}] must be a mapping")
        m = dict(m)
        m["refit_interval"] = _refit(m.get("refit_interval"), f"models[{i}]")
        m.setdefault("seed", run_seed)
        if seed is not None:
            m["seed"] = run_seed
        try:
            models.append(ForecasterSpec.from_dict(m))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"models[{i}]: {exc}") from exc
    labels = [m.label for m in models]
    if len(set(labels)) != len(labels):
        raise ValidationError(f"model labels must be unique, got {labels}")

    h = _section(doc, "horizon")
    dg = _section(doc, "diagnostics")
    cfg = RunConfig(
        name=str(doc.get("name", "custom")),
        data=data,
        calendar=doc.get("calendar", "bundled"),
        outliers=doc.get("outliers", "bundled"),
        split=split,
        models=models,
        out_dir=Path(out_dir) if out_dir is not None else Path(doc.get("out_dir", "out")),
        seed=run_seed,
        jobs=int(doc.get("jobs", 1)),
        horizon=int(h.get("steps", 13)),
        stride=int(h.get("stride", 13)),
        max_lag=int(dg.get("max_lag", 20)),
        adf_max_lag=dg.get("adf_max_lag"),
        base_dir=base_dir,
    )
    if cfg.horizon < 1 or cfg.stride < 1 or cfg.max_lag < 1 or cfg.jobs < 1:
        raise ValidationError("horizon.steps, horizon.stride, diagnostics.max_lag and jobs must be positive")
    for key in ("calendar", "outliers"):
        value = getattr(cfg, key)
        if value not in (None, "bundled") and not cfg.resolve(value).exists():
            raise ValidationError(f"{key} file {value} does not exist")
    if data.source == "csv" and not cfg.resolve(data.path).exists():
        raise ValidationError(f"series file {data.path} does not exist")
    return cfg


def load_config(path=None, seed=None, out_dir=None) -> RunConfig:
    """Read a YAML config file, or the default profile when ``path`` is None."""
    if path is None:
        source = profile_path(DEFAULT_PROFILE)
        base = Path.cwd()
    else:
        source = Path(path)
        if not source.exists():
            # a bare profile name selects a bundled profile
            candidate = profile_path(str(path))
            if not candidate.is_file():
                raise DataIOError(f"config file {path} not found")
            source = candidate
            base = Path.cwd()
        else:
            base = source.parent
    try:
        doc = yaml.safe_load(source.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ValidationError(f"config is not valid YAML: {exc}") from exc
    return parse_config(doc, base_dir=base, seed=seed, out_dir=out_dir)
