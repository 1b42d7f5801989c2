"""Naive, exponential smoothing and weighted moving average forecasters.

None of these estimate anything from data; their "fit" only records the
parameters, and every forecast is computed from the history it is given.
"""

import numpy as np


def naive_next(values: np.ndarray) -> float:
    return float(values[-1])


def exp_next(values: np.ndarray, alpha: float) -> float:
    """Run the smoothing recurrence over ``values`` and return the next forecast.

    The forecast for the first week is the first observation.
    """
    level = float(values[0])
    for x in values:
        level = alpha * float(x) + (1.0 - alpha) * level
    return level


def wma_next(values: np.ndarray, weights) -> float:
    recent = values[::-1][: len(weights)]
    return float(np.dot(np.asarray(weights, dtype=float), recent))
