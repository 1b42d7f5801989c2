"""Bug record acquisition, weekly aggregation and the on-disk series formats."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Optional

import numpy as np
import requests

from ._io import atomic_write_text, csv_text
from .errors import (
    DataIOError,
    FetchError,
    InvalidRangeError,
    ResponseParseError,
    SchemaError,
    UnknownWeekError,
    ValidationError,
)

log = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://bugzilla.mozilla.org"
WEEK = timedelta(days=7)
SERIES_HEADER = ("week_start", "count")
RELEASE_HEADER = ("version", "release_date")
OUTLIER_HEADER = ("week_start", "rule", "value")


def monday_of(d: date) -> date:
    return d - timedelta(days=d.weekday())


def _parse_date(text: str) -> date:
    return date.fromisoformat(text.strip())


def _parse_utc(text: Optional[str]) -> Optional[datetime]:
    if text in (None, ""):
        return None
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    value = datetime.fromisoformat(text)
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


def _format_utc(value: Optional[datetime]) -> Optional[str]:
    if value is None:
        return None
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class BugRecord:
    bug_id: int
    creation_time: datetime
    resolution_time: Optional[datetime] = None

    def __post_init__(self):
        if self.bug_id <= 0:
            raise ValidationError(f"bug_id must be positive, got {self.bug_id}")
        if self.resolution_time is not None and self.resolution_time < self.creation_time:
            raise ValidationError(f"bug {self.bug_id} resolved before it was created")


@dataclass(frozen=True)
class RawBugRecords:
    records: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        ids = [r.bug_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate bug_id in record collection")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_json(self) -> str:
        rows = [
            {
                "id": r.bug_id,
                "creation_time": _format_utc(r.creation_time),
                "resolution_time": _format_utc(r.resolution_time),
            }
            for r in self.records
        ]
        return json.dumps({"bugs": rows}, separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RawBugRecords":
        payload = json.loads(text)
        return cls(
            tuple(
                BugRecord(int(b["id"]), _parse_utc(b["creation_time"]), _parse_utc(b.get("resolution_time")))
                for b in payload["bugs"]
            )
        )


@dataclass(frozen=True)
class WeeklySeries:
    """Gap-free weekly counts keyed by the Monday that starts each week."""

    week_starts: tuple
    counts: tuple
    label: str = "arrival"

    def __post_init__(self):
        object.__setattr__(self, "week_starts", tuple(self.week_starts))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if self.label not in ("arrival", "resolved"):
            raise ValidationError(f"label must be 'arrival' or 'resolved', got {self.label!r}")
        if len(self.week_starts) == 0:
            raise ValidationError("a weekly series needs at least one week")
        if len(self.week_starts) != len(self.counts):
            raise ValidationError("week_starts and counts differ in length")
        for i, d in enumerate(self.week_starts):
            if d.weekday() != 0:
                raise ValidationError(f"week start {d} is not a Monday")
            if i and d - self.week_starts[i - 1] != WEEK:
                raise ValidationError(f"gap or disorder before week {d}")
        for d, c in zip(self.week_starts, self.counts):
            if c < 0:
                raise ValidationError(f"negative count {c} in week {d}")

    def __len__(self):
        return len(self.counts)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float)

    @property
    def start(self) -> date:
        return self.week_starts[0]

    @property
    def end(self) -> date:
        return self.week_starts[-1]

    def index_of(self, week_start: date) -> int:
        offset = (week_start - self.start).days
        if offset % 7 or not 0 <= offset // 7 < len(self):
            raise UnknownWeekError(f"week {week_start} is not in the series")
        return offset // 7

    def future_weeks(self, horizon: int) -> list:
        return [self.end + WEEK * (k + 1) for k in range(horizon)]

    def head(self, n: int) -> "WeeklySeries":
        return WeeklySeries(self.week_starts[:n], self.counts[:n], self.label)


@dataclass(frozen=True)
class ReleaseCalendar:
    releases: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "releases", tuple(self.releases))
        dates = [d for _, d in self.releases]
        if dates != sorted(dates):
            raise ValidationError("release calendar must be sorted by date")

    def __len__(self):
        return len(self.releases)

    @property
    def dates(self) -> list:
        return [d for _, d in self.releases]


@dataclass(frozen=True)
class OutlierRemoval:
    week_start: date
    rule: str = "interpolate"
    value: Optional[int] = None

    def __post_init__(self):
        if self.rule not in ("interpolate", "cap"):
            raise ValidationError(f"unknown outlier rule {self.rule!r}")
        if self.rule == "cap" and (self.value is None or self.value < 0):
            raise ValidationError("cap rule needs a non-negative value")


@dataclass(frozen=True)
class OutlierSpec:
    removals: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "removals", tuple(self.removals))


# ---------------------------------------------------------------------------
# Remote acquisition


def default_cache_dir() -> Path:
    env = os.environ.get("BUGCAST_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "bugcast"


def default_endpoint() -> str:
    return os.environ.get("BUGCAST_ENDPOINT", DEFAULT_ENDPOINT)


def _cache_path(cache_dir, endpoint, start, end, product) -> Path:
    key = json.dumps([endpoint.rstrip("/"), start.isoformat(), end.isoformat(), product])
    return Path(cache_dir) / f"bugs-{hashlib.sha256(key.encode()).hexdigest()[:24]}.json"


def _get_page(session, url, params, max_attempts, backoff):
    last_exc = None
    for attempt in range(1, max_attempts + 1):
        try:
            resp = session.get(url, params=params, timeout=60)
            if resp.status_code >= 500:
                raise requests.HTTPError(f"server error {resp.status_code}")
            if resp.status_code >= 400:
                raise FetchError(f"{url} answered {resp.status_code}", attempts=attempt)
            return resp.text
        except requests.RequestException as exc:
            last_exc = exc
            log.warning("request to %s failed (attempt %d/%d): %s", url, attempt, max_attempts, exc)
            if attempt < max_attempts and backoff:
                time.sleep(backoff * 2 ** (attempt - 1))
    raise FetchError(f"giving up on {url} after {max_attempts} attempts: {last_exc}", attempts=max_attempts)


def _parse_page(text, resolution_field):
    try:
        payload = json.loads(text)
        bugs = payload["bugs"]
        return [
            BugRecord(int(b["id"]), _parse_utc(b["creation_time"]), _parse_utc(b.get(resolution_field)))
            for b in bugs
        ]
    except (ValueError, KeyError, TypeError) as exc:
        raise ResponseParseError(f"malformed tracker response ({exc})", excerpt=text[:200]) from exc


def fetch_bug_counts(
    endpoint: Optional[str],
    date_range: tuple,
    page_size: int = 1000,
    *,
    product: Optional[str] = None,
    cache_dir=None,
    session: Optional[requests.Session] = None,
    max_attempts: int = 3,
    backoff: float = 0.5,
    resolution_field: str = "cf_last_resolved",
) -> RawBugRecords:
    """Download every public bug created in ``date_range`` (inclusive dates).

    Results are cached on disk keyed by endpoint, range and product; a warm
    cache answers without touching the network.
    """
    start, end = date_range
    if page_size <= 0:
        raise ValidationError("page_size must be positive")
    if end < start:
        raise InvalidRangeError(f"start {start} is after end {end}")
    if start == end:
        return RawBugRecords()
    endpoint = (endpoint or default_endpoint()).rstrip("/")
    cache_file = _cache_path(cache_dir or default_cache_dir(), endpoint, start, end, product)
    if cache_file.exists():
        log.info("cache hit: %s", cache_file)
        return RawBugRecords.from_json(cache_file.read_text(encoding="utf-8"))

    session = session or requests.Session()
    url = f"{endpoint}/rest/bug"
    base = {
        "include_fields": f"id,creation_time,{resolution_field}",
        "creation_time": start.isoformat(),
        "f1": "creation_ts",
        "o1": "lessthan",
        "v1": (end + timedelta(days=1)).isoformat(),
        "order": "bug_id",
        "limit": page_size,
    }
    if product:
        base["product"] = product
    lo = datetime.combine(start, datetime.min.time(), tzinfo=timezone.utc)
    hi = datetime.combine(end + timedelta(days=1), datetime.min.time(), tzinfo=timezone.utc)
    found = {}
    offset = 0
    while True:
        page = _parse_page(_get_page(session, url, {**base, "offset": offset}, max_attempts, backoff), resolution_field)
        for rec in page:
            if lo <= rec.creation_time < hi:
                found[rec.bug_id] = rec
        if len(page) < page_size:
            break
        offset += page_size
    records = RawBugRecords(tuple(found[k] for k in sorted(found)))
    cache_file.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(cache_file, records.to_json())
    log.info("fetched %d records from %s", len(records), endpoint)
    return records


# ---------------------------------------------------------------------------
# Aggregation and cleaning


def week_grid(start: date, end: date) -> list:
    """Mondays of every whole week inside ``[start, end]``."""
    first = monday_of(start)
    if first < start:
        first += WEEK
    last = monday_of(end)
    if (end - start).days < 6 or last < first:
        raise InvalidRangeError(f"range {start}..{end} does not span a full week")
    return [first + WEEK * k for k in range((last - first).days // 7 + 1)]


def aggregate_weekly(records: RawBugRecords, date_range: tuple, which: str = "arrival") -> WeeklySeries:
    """Bucket records into Monday-start weeks.

    Weeks are the Mondays falling inside the range; the last week extends to
    the following Sunday. Records outside those weeks are ignored.
    """
    if which not in ("arrival", "resolved"):
        raise ValidationError(f"which must be 'arrival' or 'resolved', got {which!r}")
    weeks = week_grid(*date_range)
    counts = np.zeros(len(weeks), dtype=np.int64)
    first = weeks[0]
    for rec in records:
        stamp = rec.creation_time if which == "arrival" else rec.resolution_time
        if stamp is None:
            continue
        k = (stamp.astimezone(timezone.utc).date() - first).days
        if k >= 0 and k // 7 < len(weeks):
            counts[k // 7] += 1
    return WeeklySeries(tuple(weeks), tuple(counts.tolist()), which)


def remove_outliers(series: WeeklySeries, spec: OutlierSpec) -> WeeklySeries:
    counts = list(series.counts)
    original = series.counts
    n = len(counts)
    for removal in spec.removals:
        i = series.index_of(removal.week_start)
        if removal.rule == "cap":
            counts[i] = min(original[i], int(removal.value))
            continue
        neighbours = [original[j] for j in (i - 1, i + 1) if 0 <= j < n]
        if not neighbours:
            continue
        # round-half-up keeps integer counts stable across platforms
        counts[i] = int(np.floor(sum(neighbours) / len(neighbours) + 0.5))
    return WeeklySeries(series.week_starts, tuple(counts), series.label)


# ---------------------------------------------------------------------------
# File formats


def _read_rows(path, header):
    path = Path(path)
    try:
        with path.open(encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    if not rows or tuple(c.strip() for c in rows[0]) != header:
        got = rows[0] if rows else []
        raise SchemaError(f"{path}: row 1: expected header {','.join(header)}, got {','.join(got)}", row=1)
    return [(n, r) for n, r in enumerate(rows[1:], start=2) if any(c.strip() for c in r)]


def save_series_csv(series: WeeklySeries, path) -> None:
    rows = [(d.isoformat(), c) for d, c in zip(series.week_starts, series.counts)]
    atomic_write_text(path, csv_text(SERIES_HEADER, rows))


def load_series_csv(path, label: str = "arrival") -> WeeklySeries:
    weeks, counts = [], []
    for n, row in _read_rows(path, SERIES_HEADER):
        if len(row) != 2:
            raise SchemaError(f"{path}: row {n}: expected 2 columns, got {len(row)}", row=n)
        try:
            d = _parse_date(row[0])
        except ValueError:
            raise SchemaError(f"{path}: row {n}, column week_start: bad date {row[0]!r}", row=n, column="week_start")
        try:
            c = int(row[1])
        except ValueError:
            raise SchemaError(f"{path}: row {n}, column count: not an integer {row[1]!r}", row=n, column="count")
        if c < 0:
            raise SchemaError(f"{path}: row {n}, column count: negative count {c}", row=n, column="count")
        if d.weekday() != 0:
            raise SchemaError(f"{path}: row {n}, column week_start: {d} is not a Monday", row=n, column="week_start")
        if weeks:
            expected = weeks[-1] + WEEK
            if d > expected:
                raise SchemaError(f"{path}: row {n}: missing week {expected}", row=n, column="week_start")
            if d < expected:
                raise SchemaError(f"{path}: row {n}, column week_start: {d} out of order", row=n, column="week_start")
        weeks.append(d)
        counts.append(c)
    if not weeks:
        raise SchemaError(f"{path}: no data rows")
    return WeeklySeries(tuple(weeks), tuple(counts), label)


def load_release_calendar(path) -> ReleaseCalendar:
    seen = set()
    for n, row in _read_rows(path, RELEASE_HEADER):
        if len(row) != 2:
            raise SchemaError(f"{path}: row {n}: expected 2 columns, got {len(row)}", row=n)
        try:
            seen.add((row[0].strip(), _parse_date(row[1])))
        except ValueError:
            raise SchemaError(f"{path}: row {n}, column release_date: bad date {row[1]!r}", row=n, column="release_date")
    return ReleaseCalendar(tuple(sorted(seen, key=lambda r: (r[1], r[0]))))


def load_outlier_spec(path, series: Optional[WeeklySeries] = None) -> OutlierSpec:
    removals = []
    for n, row in _read_rows(path, OUTLIER_HEADER):
        try:
            d = _parse_date(row[0])
        except ValueError:
            raise SchemaError(f"{path}: row {n}, column week_start: bad date {row[0]!r}", row=n, column="week_start")
        rule = row[1].strip()
        value = int(row[2]) if len(row) > 2 and row[2].strip() else None
        removals.append(OutlierRemoval(d, rule, value))
    spec = OutlierSpec(tuple(removals))
    if series is not None:
        for r in spec.removals:
            series.index_of(r.week_start)
    return spec
