"""Forecaster configuration: family, hyperparameters, seed."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Optional, Union

from ..errors import ValidationError

FAMILIES = ("Naive", "EXP", "WMA", "ARIMA", "RF", "LSTM")
_EXOG_FAMILIES = ("ARIMA", "RF", "LSTM")


@dataclass(frozen=True)
class NaiveParams:
    pass


@dataclass(frozen=True)
class ExpParams:
    alpha: float = 0.5

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValidationError(f"alpha must lie in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class WmaParams:
    weights: tuple = (0.66, 0.33)  # newest first
    raw_weights: bool = False

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.weights or any(not w > 0 for w in self.weights):
            raise ValidationError("WMA weights must be a non-empty list of positive numbers")

    @property
    def effective_weights(self) -> tuple:
        if self.raw_weights:
            return self.weights
        total = sum(self.weights)
        return tuple(w / total for w in self.weights)


@dataclass(frozen=True)
class ArimaParams:
    p: int = 2
    d: int = 0
    q: int = 0

    def __post_init__(self):
        if self.p < 0 or self.d < 0:
            raise ValidationError("ARIMA orders must be non-negative")
        if self.q != 0:
            raise ValidationError("moving-average terms (q > 0) are not supported")


@dataclass(frozen=True)
class RfParams:
    n_trees: int = 100
    max_features: str = "sqrt"
    lag_count: int = 4
    min_samples_leaf: int = 2
    n_jobs: int = 1

    def __post_init__(self):
        if self.max_features not in ("sqrt", "all"):
            raise ValidationError(f"max_features must be 'sqrt' or 'all', got {self.max_features!r}")
        for name in ("n_trees", "lag_count", "min_samples_leaf", "n_jobs"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")

    def n_candidates(self, n_features: int) -> int:
        if self.max_features == "all":
            return n_features
        return min(n_features, math.ceil(math.sqrt(n_features)))


@dataclass(frozen=True)
class LstmParams:
    units: int = 100
    epochs: int = 50
    window: int = 13
    learning_rate: float = 1e-3
    batch_size: int = 32
    clip_norm: float = 5.0

    def __post_init__(self):
        for name in ("units", "epochs", "window", "batch_size"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be positive")


PARAM_TYPES = {
    "Naive": NaiveParams,
    "EXP": ExpParams,
    "WMA": WmaParams,
    "ARIMA": ArimaParams,
    "RF": RfParams,
    "LSTM": LstmParams,
}

# steps between refits during rolling evaluation when nothing else is configured
DEFAULT_REFIT = {"Naive": 1, "EXP": 1, "WMA": 1, "ARIMA": 1, "RF": 1, "LSTM": 4}

Params = Union[NaiveParams, ExpParams, WmaParams, ArimaParams, RfParams, LstmParams]


@dataclass(frozen=True)
class ForecasterSpec:
    family: str
    use_exogenous: bool = False
    params: Optional[Params] = None
    seed: int = 0
    label: Optional[str] = None
    refit_interval: Optional[int] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown model family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        if self.params is None:
            object.__setattr__(self, "params", PARAM_TYPES[self.family]())
        elif not isinstance(self.params, PARAM_TYPES[self.family]):
            raise ValidationError(f"{self.family} needs {PARAM_TYPES[self.family].__name__}")
        if self.use_exogenous and self.family not in _EXOG_FAMILIES:
            raise ValidationError(f"{self.family} has no exogenous variant")
        if self.refit_interval is not None and self.refit_interval < 1:
            raise ValidationError("refit_interval must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.label is None:
            name = "Base" if self.family == "Naive" else self.family
            object.__setattr__(self, "label", name + ("x" if self.use_exogenous else ""))

    @property
    def min_history(self) -> int:
        p = self.params
        if self.family == "WMA":
            return len(p.weights)
        if self.family == "ARIMA":
            return p.p + p.d + 10
        if self.family == "RF":
            return p.lag_count + 10
        if self.family == "LSTM":
            return p.window + 10
        return 1

    def with_seed(self, seed: int) -> "ForecasterSpec":
        return ForecasterSpec(self.family, self.use_exogenous, self.params, seed, self.label, self.refit_interval)

    def to_dict(self) -> dict:
        params = asdict(self.params)
        if "weights" in params:
            params["weights"] = list(params["weights"])
        return {
            "family": self.family,
            "use_exogenous": self.use_exogenous,
            "params": params,
            "seed": self.seed,
            "label": self.label,
            "refit_interval": self.refit_interval,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ForecasterSpec":
        family = data.get("family")
        if family not in PARAM_TYPES:
            raise ValidationError(f"unknown model family {family!r}")
        ptype = PARAM_TYPES[family]
        raw = dict(data.get("params") or {})
        known = {f.name for f in fields(ptype)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown {family} parameter(s): {', '.join(sorted(unknown))}")
        if "weights" in raw:
            raw["weights"] = tuple(raw["weights"])
        return cls(
            family=family,
            use_exogenous=bool(data.get("use_exogenous", data.get("exogenous", False))),
            params=ptype(**raw),
            seed=int(data.get("seed", 0)),
            label=data.get("label"),
            refit_interval=data.get("refit_interval"),
        )
