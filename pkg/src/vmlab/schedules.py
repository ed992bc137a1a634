"""Time-varying coefficient schedules and their structural validators.

A schedule models one of the two control coefficients (the variable mass
or the viscous damping): non-increasing, nonnegative, with closed-form
derivatives up to order 3 for the power family.  The validators certify
the decay inequalities that every bound and approximation downstream
relies on, fitting the minimal constants on a geometric grid and using
analytic shortcuts for the power family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DegenerateScheduleError,
    UnsupportedDerivativeError,
)

EPS_POSITIVITY_FLOOR = 1e-14

INTEGRABLE = "integrable"
NON_INTEGRABLE = "non-integrable"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class Schedule:
    """One coefficient t -> c0 / (t+1)^a, a constant, zero, or a table.

    ``family`` is one of ``power``, ``constant``, ``zero``, ``table``.
    Tables carry sampled (times, values) pairs and support order-0
    evaluation only (linear interpolation).
    """

    family: str
    c0: float = 0.0
    exponent: float = 0.0
    table: Optional[tuple] = None  # (times tuple, values tuple)

    def __post_init__(self):
        if self.family not in ("power", "constant", "zero", "table"):
            raise ValueError(f"unknown schedule family {self.family!r}")
        if self.c0 < 0 or self.exponent < 0:
            raise ValueError("c0 and exponent must be nonnegative")
        if self.family == "table" and self.table is None:
            raise ValueError("table family needs sampled data")

    # -- constructors -------------------------------------------------

    @classmethod
    def power(cls, c0: float, a: float) -> "Schedule":
        return cls("power", c0=float(c0), exponent=float(a))

    @classmethod
    def constant(cls, c0: float) -> "Schedule":
        return cls("constant", c0=float(c0))

    @classmethod
    def zero(cls) -> "Schedule":
        return cls("zero")

    @classmethod
    def from_table(cls, times, values) -> "Schedule":
        times = tuple(float(t) for t in times)
        values = tuple(float(v) for v in values)
        if len(times) != len(values) or len(times) < 2:
            raise ValueError("table needs matching times/values, length >= 2")
        return cls("table", c0=values[0], table=(times, values))

    # -- evaluation ---------------------------------------------------

    def __call__(self, t, order: int = 0):
        """k-th derivative at t (vectorized over t)."""
        if not 0 <= order <= 3:
            raise ValueError("order must be in 0..3")
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("t must be nonnegative")
        if self.family == "zero":
            return np.zeros_like(t) if t.ndim else 0.0
        if self.family == "constant":
            out = np.full_like(t, self.c0) if t.ndim else self.c0
            return out if order == 0 else out * 0.0
        if self.family == "power":
            a = self.exponent
            if a == 0.0:  # degenerate power == constant
                val = self.c0 if order == 0 else 0.0
                return np.full_like(t, val) if t.ndim else val
            coeff = self.c0
            for j in range(order):
                coeff *= -(a + j)
            out = coeff * (t + 1.0) ** (-(a + order))
            return out if t.ndim else float(out)
        # table
        if order > 0:
            raise UnsupportedDerivativeError(
                "table schedules support order-0 evaluation only")
        times, values = self.table
        out = np.interp(t, times, values)
        return out if t.ndim else float(out)

    # -- metadata -----------------------------------------------------

    @property
    def integrable_flag(self) -> str:
        if self.family == "zero":
            return INTEGRABLE
        if self.family == "constant" or (self.family == "power"
                                         and self.exponent == 0.0):
            return INTEGRABLE if self.c0 == 0.0 else NON_INTEGRABLE
        if self.family == "power":
            return INTEGRABLE if self.exponent > 1.0 else NON_INTEGRABLE
        return UNKNOWN

    @property
    def is_analytic(self) -> bool:
        return self.family in ("power", "constant", "zero")

    def derivative_on_grid(self, grid: np.ndarray) -> np.ndarray:
        """First derivative; central differences for table schedules."""
        if self.is_analytic:
            return np.asarray(self(grid, order=1), dtype=float)
        h = 1e-5
        lo = np.maximum(grid - h, 0.0)
        hi = grid + h
        return (self(hi) - self(lo)) / (hi - lo)


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of one structural check.

    ``holds`` is None when the verdict cannot be decided (table family).
    ``c1``/``c2`` are the minimal fitted constants where applicable and
    ``witness`` the time of the worst violation (or worst ratio).
    """

    check: str
    holds: Optional[bool]
    c1: Optional[float] = None
    c2: Optional[float] = None
    witness: Optional[float] = None
    certified_from: float = 0.0
    detail: str = ""


def assumption_grid(horizon: float, gamma: float = 0.1) -> np.ndarray:
    """{0} union {gamma * 2^j} capped at the horizon."""
    pts = [0.0]
    v = gamma
    while v < horizon:
        pts.append(v)
        v *= 2.0
    pts.append(float(horizon))
    return np.asarray(pts)


def _ratio_fit(num: np.ndarray, den: np.ndarray, grid: np.ndarray):
    """max num/den over the grid; flags a still-growing maximum as unbounded."""
    den = np.asarray(den, dtype=float)
    if np.any(den <= 0):
        raise DegenerateScheduleError("denominator schedule hit zero on grid")
    ratio = np.asarray(num, dtype=float) / den
    k = int(np.argmax(ratio))
    bounded = True
    if k == len(grid) - 1 and len(grid) >= 3 and ratio[-1] > ratio[-2] > ratio[-3]:
        bounded = False  # maximum still growing at the end of the grid
    return float(ratio[k]), float(grid[k]), bounded


def check_mass_dominated(eps: Schedule, alpha: Schedule,
                         grid: np.ndarray) -> AssumptionReport:
    """|eps'| <= c1 * eps and alpha <= c2 * eps, with minimal constants.

    Power families are classified analytically (worst case at t=0 or in
    the tail); other families are fitted on the grid.
    """
    grid = np.asarray(grid, dtype=float)
    eps_vals = np.asarray(eps(grid), dtype=float)
    if np.any(eps_vals < EPS_POSITIVITY_FLOOR):
        raise DegenerateScheduleError("eps fell below the positivity floor")

    if eps.is_analytic and alpha.is_analytic:
        a_eps = eps.exponent if eps.family == "power" else 0.0
        c1 = a_eps  # |eps'|/eps = a/(t+1), maximal at t=0
        if alpha.family == "zero" or alpha.c0 == 0.0:
            return AssumptionReport("mass_dominated", True, c1=c1, c2=0.0)
        a_alpha = alpha.exponent if alpha.family == "power" else 0.0
        if a_alpha >= a_eps:
            c2 = alpha.c0 / eps.c0  # ratio maximal at t=0
            return AssumptionReport("mass_dominated", True, c1=c1, c2=c2,
                                    witness=0.0)
        return AssumptionReport(
            "mass_dominated", False, c1=c1, c2=math.inf,
            witness=float(grid[-1]),
            detail="alpha/eps grows without bound")

    d1 = np.abs(eps.derivative_on_grid(grid))
    c1, w1, b1 = _ratio_fit(d1, eps_vals, grid)
    alpha_vals = np.asarray(alpha(grid), dtype=float)
    c2, w2, b2 = _ratio_fit(alpha_vals, eps_vals, grid)
    holds = b1 and b2
    witness = w1 if (not b1 or c1 >= c2) else w2
    return AssumptionReport("mass_dominated", holds, c1=c1, c2=c2,
                            witness=witness,
                            detail="" if holds else "ratio unbounded on grid")


def check_subexponential(eps: Schedule, alpha: Schedule,
                         grid: np.ndarray) -> AssumptionReport:
    """|eps'| <= c1 * eps and |alpha'| <= c2 * alpha."""
    grid = np.asarray(grid, dtype=float)
    eps_vals = np.asarray(eps(grid), dtype=float)
    if np.any(eps_vals < EPS_POSITIVITY_FLOOR):
        raise DegenerateScheduleError("eps fell below the positivity floor")

    if eps.is_analytic and alpha.is_analytic:
        c1 = eps.exponent if eps.family == "power" else 0.0
        if alpha.family == "zero" or alpha.c0 == 0.0:
            c2 = 0.0  # zero damping satisfies the bound by convention
        else:
            c2 = alpha.exponent if alpha.family == "power" else 0.0
        return AssumptionReport("subexponential", True, c1=c1, c2=c2)

    d_eps = np.abs(eps.derivative_on_grid(grid))
    c1, w1, b1 = _ratio_fit(d_eps, eps_vals, grid)
    alpha_vals = np.asarray(alpha(grid), dtype=float)
    if np.all(alpha_vals == 0.0):
        return AssumptionReport("subexponential", b1, c1=c1, c2=0.0,
                                witness=None if b1 else w1)
    d_alpha = np.abs(alpha.derivative_on_grid(grid))
    c2, w2, b2 = _ratio_fit(d_alpha, alpha_vals, grid)
    holds = b1 and b2
    return AssumptionReport("subexponential", holds, c1=c1, c2=c2,
                            witness=w1 if not b1 else (w2 if not b2 else None))


def check_small_initial_mass(eps: Schedule, alpha: Schedule, lam: float,
                             beta: float,
                             grid: np.ndarray) -> AssumptionReport:
    """eps(0) < (beta*lam)^2 / (2|alpha'(t)| + 4*lam) for all t.

    |alpha'| is maximal at t=0 for the monotone families, so the bound's
    minimum sits at t=0; the grid scan covers table schedules.
    """
    if lam <= 0 or beta <= 0:
        raise ValueError("lam and beta must be positive")
    grid = np.asarray(grid, dtype=float)
    d_alpha = np.abs(alpha.derivative_on_grid(grid))
    bounds = (beta * lam) ** 2 / (2.0 * d_alpha + 4.0 * lam)
    k = int(np.argmin(bounds))
    bound = float(bounds[k])
    eps0 = float(eps(0.0))
    holds = eps0 < bound
    return AssumptionReport("small_initial_mass", holds, c1=bound,
                            witness=float(grid[k]) if not holds else None,
                            detail=f"eps0={eps0:g} vs bound={bound:g}")


def check_tail_integrability(eps: Schedule,
                             alpha: Schedule) -> AssumptionReport:
    """Derivatives of orders 1-3 integrable, eps -> 0, eps'^2/eps integrable.

    Analytic classification for power/constant/zero families; table
    schedules yield an unknown verdict.
    """
    if not (eps.is_analytic and alpha.is_analytic):
        return AssumptionReport("tail_integrability", None,
                                detail="table schedule: verdict unknown")
    # power-family derivatives of order k >= 1 decay like (t+1)^{-a-k},
    # hence integrable for any a > 0; constants have zero derivatives.
    # eps'^2/eps decays like (t+1)^{-a-2}, integrable for a > 0.
    eps_vanishes = eps.family == "power" and eps.exponent > 0.0 and eps.c0 > 0.0
    if eps.family == "zero" or eps.c0 == 0.0:
        return AssumptionReport("tail_integrability", False,
                                detail="eps must be positive")
    if not eps_vanishes:
        return AssumptionReport("tail_integrability", False,
                                detail="eps does not vanish at infinity")
    return AssumptionReport("tail_integrability", True)
