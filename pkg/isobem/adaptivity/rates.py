"""Empirical convergence rates: slopes in the log-log plot over #T"""

from typing import Sequence, Union

import numpy as np

from isobem.adaptivity.loop import AdaptiveTrace

Curve = Union[AdaptiveTrace, tuple[Sequence[float], Sequence[float]]]


def _curve(curve: Curve) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(curve, AdaptiveTrace):
        n, eta = curve.num_elements, curve.estimators
    else:
        n, eta = curve
    n = np.asarray(n, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if n.shape != eta.shape:
        raise ValueError(f"Curve sizes differ: {n.shape} vs {eta.shape}")
    return n, eta


def fit_rate(curve: Curve, window: int = 4) -> float:
    """
    Least-squares slope of log(eta) against log(#T) over the last `window` points

    >>> round(fit_rate(([1, 4, 16, 64], [1, 0.5, 0.25, 0.125])), 12)
    -0.5
    """
    n, eta = _curve(curve)
    if window < 2:
        raise ValueError(f"Rate window needs at least 2 points, got {window}")
    n, eta = n[-window:], eta[-window:]
    if len(n) < 2:
        raise ValueError(f"Need at least 2 points for a rate, got {len(n)}")
    if np.any(n <= 0) or np.any(eta <= 0):
        raise ValueError("Rates need positive element counts and values")
    slope, _ = np.polyfit(np.log(n), np.log(eta), 1)
    return float(slope)


def fit_error_rate(trace: AdaptiveTrace, window: int = 4) -> float:
    errors = [e for e in trace.energy_errors if e is not None]
    n = trace.num_elements[: len(errors)]
    return fit_rate((n, errors), window)


def compare_curves(adaptive: Curve, uniform: Curve, start: int = 3) -> np.ndarray:
    """
    Ratios eta_adaptive / eta_uniform at the adaptive element counts from index `start` on,
    the uniform curve interpolated linearly in log-log; counts outside the uniform range are skipped.
    """
    na, ea = _curve(adaptive)
    nu, eu = _curve(uniform)
    na, ea = na[start:], ea[start:]
    inside = (na >= nu.min()) & (na <= nu.max())
    if not np.any(inside):
        return np.zeros(0)
    order = np.argsort(nu)
    log_eu = np.interp(np.log(na[inside]), np.log(nu[order]), np.log(eu[order]))
    return ea[inside] / np.exp(log_eu)
