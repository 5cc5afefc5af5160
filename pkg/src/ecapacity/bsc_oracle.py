"""Closed-form parametric sphere-packing curve of the binary symmetric channel.

For crossover ``w1`` and uniform input the optimal test channel is again a
BSC whose crossover is the tilted probability
``v1(s) = w1**s / (w1**s + w2**s)``, ``s`` in (0, 1).  Sweeping ``s`` traces
the whole ``(E, R)`` curve; ``s -> 1`` gives ``(0, C)`` and ``s -> 0`` gives
the zero-rate point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import ConsistencyError, ValidationError
from .prob_core import Channel, Distribution


@dataclass(frozen=True)
class BscParamPoint:
    s: float
    v_bar: Distribution
    E: float
    R: float


def bsc_channel(w1: float) -> Channel:
    """2x2 channel with crossover ``w1`` off the diagonal."""
    if not 0.0 < w1 < 1.0:
        raise ValidationError(f"crossover must lie in (0, 1), got {w1!r}")
    return Channel([[1.0 - w1, w1], [w1, 1.0 - w1]])


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _point(s: float, w1: float) -> tuple[float, float, float]:
    w2 = 1.0 - w1
    a, b = w1**s, w2**s
    z = a + b
    v1, v2 = a / z, b / z
    E = v1 * math.log2(w1 ** (s - 1) / z) + v2 * math.log2(w2 ** (s - 1) / z)
    R = 1.0 + v1 * math.log2(a / z) + v2 * math.log2(b / z)
    return v1, max(E, 0.0), max(R, 0.0)


def bsc_parametric_point(s: float, w1: float) -> BscParamPoint:
    """Evaluate the parametric pair ``(E(s), R(s))`` and the tilted test channel."""
    if not 0.0 < s < 1.0:
        raise ValidationError(f"parameter s must lie in (0, 1), got {s!r}")
    if not 0.0 < w1 < 1.0:
        raise ValidationError(f"crossover must lie in (0, 1), got {w1!r}")
    v1, E, R = _point(s, w1)
    return BscParamPoint(s=s, v_bar=Distribution([v1, 1.0 - v1]), E=E, R=R)


def bsc_zero_rate_reliability(w1: float) -> float:
    """``E(0+) = -1 - log2(w1 w2) / 2``, where the curve reaches rate 0."""
    return -1.0 - 0.5 * math.log2(w1 * (1.0 - w1))


@lru_cache(maxsize=64)
def _assert_monotone(w1: float, points: int = 10_001) -> None:
    s = np.linspace(0.0, 1.0, points)[1:-1]
    w2 = 1.0 - w1
    a, b = w1**s, w2**s
    z = a + b
    v1, v2 = a / z, b / z
    E = v1 * np.log2(w1 ** (s - 1) / z) + v2 * np.log2(w2 ** (s - 1) / z)
    R = 1.0 + v1 * np.log2(a / z) + v2 * np.log2(b / z)
    if not (np.all(np.diff(E) < 0) and np.all(np.diff(R) > 0)):
        raise ConsistencyError(f"parametric BSC curve is not monotone for w1={w1!r}")


def bsc_sphere_packing_of_E(E: float, w1: float) -> float:
    """Sphere-packing rate at reliability ``E`` for BSC(``w1``) and uniform input.

    Inverts ``E(s)`` by root finding in ``s``.
    """
    if E < 0:
        raise ValidationError(f"reliability must be nonnegative, got {E!r}")
    if not 0.0 < w1 < 1.0:
        raise ValidationError(f"crossover must lie in (0, 1), got {w1!r}")
    if w1 == 0.5:
        return 0.0
    if E == 0.0:
        return 1.0 - _binary_entropy(w1)
    if E >= bsc_zero_rate_reliability(w1):
        return 0.0
    _assert_monotone(w1)
    s = brentq(lambda t: _point(t, w1)[1] - E, 0.0 + 1e-300, 1.0, xtol=1e-15, rtol=1e-15, maxiter=500)
    return _point(s, w1)[2]
