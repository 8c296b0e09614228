"""Accumulation helpers with extra precision.

The cross-path agreement contract between the O(n) and O(n^2) rate
evaluators is tight (1e-12 normalized), so both run their reductions in
extended precision where the platform provides a true extended
``longdouble`` (x86 80-bit).  On platforms where ``longdouble`` aliases
``float64`` the running sums fall back to Neumaier compensation above
COMPENSATED_MIN_N entries and plain ascending ``cumsum`` below; the
agreement margins are then somewhat looser.

Scalar reductions feeding the diagnostics (moments, bound sides) go
through ``math.fsum`` and are exactly rounded regardless of platform.
"""
from __future__ import annotations

import math

import numpy as np

EXTENDED = np.finfo(np.longdouble).eps < np.finfo(np.float64).eps
ACC_DTYPE = np.longdouble if EXTENDED else np.float64

COMPENSATED_MIN_N = 1024


def _neumaier_cumsum(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    s = 0.0
    c = 0.0
    for k in range(x.shape[0]):
        v = float(x[k])
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[k] = s + c
    return out


def running_sum(x: np.ndarray) -> np.ndarray:
    """Ascending-index running sum in accumulator precision.

    Returns an ACC_DTYPE array; callers combine in that dtype and round
    to float64 once at the end.
    """
    if EXTENDED:
        if x.dtype == ACC_DTYPE:
            return np.cumsum(x)
        return np.cumsum(x.astype(ACC_DTYPE))
    if x.shape[0] >= COMPENSATED_MIN_N:
        return _neumaier_cumsum(np.asarray(x, dtype=np.float64))
    return np.cumsum(x)


def running_suffix_sum(x: np.ndarray) -> np.ndarray:
    """running_suffix_sum(x)[i] = sum of x[i:], accumulator precision."""
    return running_sum(x[::-1])[::-1]


def exact_total(x) -> float:
    """Exactly rounded sum of a float array."""
    return math.fsum(np.asarray(x, dtype=np.float64).tolist())


def exact_dot(a, b) -> float:
    """Exactly rounded sum of the elementwise products (products round once)."""
    prod = np.asarray(a, dtype=np.float64) * np.asarray(b, dtype=np.float64)
    return math.fsum(prod.tolist())
