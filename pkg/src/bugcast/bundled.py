"""Data files shipped inside the package."""

from importlib import resources

from .ingest import load_outlier_spec, load_release_calendar, load_series_csv


def data_path(name: str):
    return resources.files("bugcast") / "data" / name


def profile_path(name: str):
    return resources.files("bugcast") / "profiles" / f"{name}.yaml"


def arrival_series():
    """Weekly arrivals 2010-01-04 .. 2019-12-30 (synthetic stand-in, see README)."""
    with resources.as_file(data_path("mozilla_arrivals_surrogate.csv")) as p:
        return load_series_csv(p, "arrival")


def release_calendar():
    with resources.as_file(data_path("releases.csv")) as p:
        return load_release_calendar(p)


def outlier_spec(which: str = "arrival"):
    with resources.as_file(data_path(f"outliers_{which}.csv")) as p:
        return load_outlier_spec(p)
