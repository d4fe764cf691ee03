"""Shared quadrature rules: trapezoid in time, cell sums in space."""

from __future__ import annotations

import numpy as np


def trapezoid_weights(times) -> np.ndarray:
    """Trapezoid weights for samples at the given strictly increasing times."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a nonempty 1D sequence")
    if t.size == 1:
        return np.array([1.0])
    if np.any(np.diff(t) <= 0.0):
        raise ValueError("times must be strictly increasing")
    w = np.zeros_like(t)
    w[0] = 0.5 * (t[1] - t[0])
    w[-1] = 0.5 * (t[-1] - t[-2])
    w[1:-1] = 0.5 * (t[2:] - t[:-2])
    return w


def integrate_time(series, times) -> float:
    """Trapezoid integral of scalar samples over the time list."""
    w = trapezoid_weights(times)
    return float(np.dot(w, np.asarray(series, dtype=float)))
