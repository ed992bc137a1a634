"""Quadrature utilities: adaptive Simpson, grid rules, prefix caches,
and geometric tail extrapolation for improper integrals."""

from __future__ import annotations

import bisect
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IntegrabilityWarning

TRAPEZOID = "trapezoid-on-grid"
ADAPTIVE = "adaptive-simpson"


@dataclass(frozen=True)
class QuadratureRule:
    kind: str = ADAPTIVE
    tol: float = 1e-10

    def __post_init__(self):
        if self.kind not in (TRAPEZOID, ADAPTIVE):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-10, max_depth: int = 50) -> float:
    """Recursive adaptive Simpson integration of f on [a, b]."""
    if a == b:
        return 0.0
    if a > b:
        return -adaptive_simpson(f, b, a, tol, max_depth)

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, eps, depth):
        xm = 0.5 * (x0 + x2)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x2)
        fl = f(xl)
        fr = f(xr)
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return (recurse(x0, xm, f0, fl, f1, left, eps / 2.0, depth - 1)
                + recurse(xm, x2, f1, fr, f2, right, eps / 2.0, depth - 1))

    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, max_depth)


def trapezoid_on_grid(values, times) -> float:
    return float(np.trapezoid(np.asarray(values, float),
                              np.asarray(times, float)))


def exp_weighted_series(g_values, times, beta: float) -> np.ndarray:
    """I_k = int_0^{t_k} e^{(s - t_k)/beta} g(s) ds on a uniform grid.

    Stable left-to-right recurrence: each step damps the previous value
    by e^{-dt/beta} and adds the trapezoid of the weighted integrand on
    the new cell, so no large exponentials are ever formed.
    """
    g = np.asarray(g_values, dtype=float)
    t = np.asarray(times, dtype=float)
    out = np.zeros_like(g)
    for k in range(1, len(t)):
        dt = t[k] - t[k - 1]
        damp = np.exp(-dt / beta)
        piece = 0.5 * dt * (damp * g[k - 1] + g[k])
        out[k] = damp * out[k - 1] + piece
    return out


def exp_weighted_adaptive(g: Callable[[float], float], t: float,
                          beta: float, tol: float = 1e-10) -> float:
    """int_0^t e^{(s-t)/beta} g(s) ds by adaptive Simpson."""
    if t == 0.0:
        return 0.0
    return adaptive_simpson(lambda s: np.exp((s - t) / beta) * g(s),
                            0.0, t, tol=tol)


class PrefixIntegral:
    """Cached cumulative integral int_0^t f, reusing earlier endpoints.

    Queries integrate only the gap from the nearest cached point below,
    so evaluating along an increasing grid costs one short adaptive
    Simpson call per new point.
    """

    def __init__(self, f: Callable[[float], float], tol: float = 1e-10):
        self.f = f
        self.tol = tol
        self._ts = [0.0]
        self._vals = [0.0]

    def __call__(self, t: float) -> float:
        t = float(t)
        if t < 0:
            raise ValueError("t must be nonnegative")
        i = bisect.bisect_right(self._ts, t) - 1
        t0, v0 = self._ts[i], self._vals[i]
        if t == t0:
            return v0
        val = v0 + adaptive_simpson(self.f, t0, t, tol=self.tol)
        j = bisect.bisect_left(self._ts, t)
        self._ts.insert(j, t)
        self._vals.insert(j, val)
        return val


def tail_integral(f: Callable[[float], float], t_start: float,
                  tol: float = 1e-10, decade: float = 10.0,
                  warn: bool = True):
    """Estimate int_{t_start}^inf f by decade-ratio extrapolation.

    Integrates two decades past t_start; if their contributions shrink
    geometrically, the remaining tail is extrapolated from the decay
    ratio, otherwise the estimate is flagged non-convergent.
    """
    d1 = adaptive_simpson(f, t_start, decade * t_start, tol=tol)
    d2 = adaptive_simpson(f, decade * t_start, decade ** 2 * t_start, tol=tol)
    converged = abs(d2) < 0.95 * abs(d1) or (d1 == 0.0 and d2 == 0.0)
    total = d1 + d2
    if converged and d1 != 0.0:
        q = abs(d2) / abs(d1)
        total += d2 * q / (1.0 - q)
    elif not converged and warn:
        warnings.warn("tail contributions do not shrink geometrically",
                      IntegrabilityWarning, stacklevel=2)
    return float(total), bool(converged)
