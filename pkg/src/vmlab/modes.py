"""Scalar eigenmode machinery for quadratic objectives.

On a quadratic 1/2 ||A y||^2 the variable-mass dynamics decouples, in
the eigenbasis of A^T A, into scalar equations

    eps(t) x'' + (alpha(t) + beta*lam) x' + lam x = 0.

This module provides the eigenmode reduction, the closed forms of the
two degenerate flows, the canonical (p, r) transform, the error
functional phi with its improper integral, the two-term approximate
solution with multiplicative error envelopes, an expanded slow-branch
exponent for asymptotics, and the convergence-rate classifier.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    AssumptionViolatedError,
    DegenerateBasisError,
    SeriesUnderflowError,
)
from .quadrature import (
    PrefixIntegral,
    QuadratureRule,
    adaptive_simpson,
    tail_integral,
)
from .schedules import NON_INTEGRABLE, Schedule

FASTER = "faster"
AS_FAST = "as-fast"
SLOWER = "slower"
AMBIGUOUS = "ambiguous"

# ratio eps(t)/(beta*lam) above which the expanded exponent is advisory
SMALL_MASS_ADVISORY = 0.1


@dataclass(frozen=True)
class ScalarMode:
    """One eigenmode: eps x'' + (alpha + beta*lam) x' + lam x = 0."""

    lam: float
    beta: float
    eps: Schedule
    alpha: Schedule
    x0: float = 1.0
    v0: float = 0.0

    def __post_init__(self):
        if self.lam <= 0 or self.beta <= 0:
            raise ValueError("lam and beta must be positive")


@dataclass(frozen=True)
class ModeDecomposition:
    """Eigenmodes plus the orthogonal map back to the original basis."""

    modes: tuple
    q: np.ndarray  # columns are eigenvectors

    def reconstruct(self, mode_values: np.ndarray) -> np.ndarray:
        """Map per-mode scalars (last axis) back to coordinates."""
        return np.asarray(mode_values, dtype=float) @ self.q.T


def eigenmodes(spec, beta: float, eps: Schedule, alpha: Schedule,
               x0, v0=None) -> ModeDecomposition:
    """Diagonalize A^T A and project the initial data onto each mode."""
    h = spec.hessian()
    evals, q = np.linalg.eigh(h)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    v0 = (np.zeros_like(x0) if v0 is None
          else np.atleast_1d(np.asarray(v0, dtype=float)))
    x0m = q.T @ x0
    v0m = q.T @ v0
    modes = tuple(
        ScalarMode(lam=float(evals[i]), beta=beta, eps=eps, alpha=alpha,
                   x0=float(x0m[i]), v0=float(v0m[i]))
        for i in range(len(evals)))
    return ModeDecomposition(modes=modes, q=q)


# -- closed forms ------------------------------------------------------


def closed_form_cn(x0: float, beta: float, t):
    """Pure Newton mode: x0 * e^{-t/beta} (independent of lam)."""
    t = np.asarray(t, dtype=float)
    out = x0 * np.exp(-t / beta)
    return out if t.ndim else float(out)


def closed_form_lm(mode: ScalarMode, t,
                   rule: QuadratureRule = QuadratureRule()):
    """Damped Newton mode: x0 * exp(-int_0^t lam/(alpha + beta*lam)).

    Closed-form antiderivatives for the zero, constant and 1/(t+1)
    damping families; adaptive quadrature otherwise.
    """
    lam, beta = mode.lam, mode.beta
    alpha = mode.alpha
    t_arr = np.asarray(t, dtype=float)
    bl = beta * lam
    if alpha.family == "zero" or alpha.c0 == 0.0:
        ex = -t_arr / beta
    elif alpha.family == "constant" or (alpha.family == "power"
                                        and alpha.exponent == 0.0):
        ex = -lam * t_arr / (alpha.c0 + bl)
    elif alpha.family == "power" and alpha.exponent == 1.0:
        a0 = alpha.c0
        ex = -(t_arr - (a0 / bl) * np.log(
            (a0 + bl * (t_arr + 1.0)) / (a0 + bl))) / beta
    else:
        prefix = _lm_exponent_prefix(mode)
        ex = np.array([-prefix(float(s)) for s in np.atleast_1d(t_arr)])
        if not t_arr.ndim:
            ex = ex[0]
    out = mode.x0 * np.exp(ex)
    return out if t_arr.ndim else float(out)


@functools.lru_cache(maxsize=256)
def _lm_exponent_prefix(mode: ScalarMode) -> PrefixIntegral:
    lam, bl = mode.lam, mode.beta * mode.lam
    return PrefixIntegral(lambda s: lam / (float(mode.alpha(s)) + bl))


# -- canonical transform -----------------------------------------------


def p_r_eval(mode: ScalarMode, t, order: int = 2) -> dict:
    """p, r and their derivatives at t (vectorized).

    p = (alpha + beta*lam)/eps and r = p^2/4 + p'/2 - lam/eps.
    Derivatives are assembled from the schedules' closed-form
    derivatives through w = 1/eps (quotient-free Leibniz composition),
    so no finite differencing is involved.

    Returns keys ``p``, ``p1``, ``r`` and, for order >= 1, ``r1``;
    for order >= 2, ``r2``.  Raises when r is not strictly positive.
    """
    if not 0 <= order <= 2:
        raise ValueError("order must be in 0..2")
    t = np.asarray(t, dtype=float)
    lam, beta = mode.lam, mode.beta
    bl = beta * lam

    e0 = np.asarray(mode.eps(t), dtype=float)
    if np.any(e0 <= 0.0):
        raise AssumptionViolatedError("mass schedule must stay positive")
    e1 = np.asarray(mode.eps(t, order=1), dtype=float)
    e2 = np.asarray(mode.eps(t, order=2), dtype=float)
    e3 = np.asarray(mode.eps(t, order=3), dtype=float)

    u0 = np.asarray(mode.alpha(t), dtype=float) + bl
    u1 = np.asarray(mode.alpha(t, order=1), dtype=float)
    u2 = np.asarray(mode.alpha(t, order=2), dtype=float)
    u3 = np.asarray(mode.alpha(t, order=3), dtype=float)

    w0 = 1.0 / e0
    w1 = -e1 / e0 ** 2
    w2 = (2.0 * e1 ** 2 - e0 * e2) / e0 ** 3
    w3 = (-6.0 * e1 ** 3 + 6.0 * e0 * e1 * e2 - e0 ** 2 * e3) / e0 ** 4

    p0 = u0 * w0
    p1 = u1 * w0 + u0 * w1
    p2 = u2 * w0 + 2.0 * u1 * w1 + u0 * w2
    p3 = u3 * w0 + 3.0 * u2 * w1 + 3.0 * u1 * w2 + u0 * w3

    r0 = p0 ** 2 / 4.0 + p1 / 2.0 - lam * w0
    if np.any(r0 <= 0.0):
        raise AssumptionViolatedError(
            "canonical coefficient r is not positive; the initial mass is "
            "too large for this mode")
    out = {"p": r0 * 0 + p0, "p1": p1 + 0 * r0, "r": r0}
    if order >= 1:
        out["r1"] = p0 * p1 / 2.0 + p2 / 2.0 - lam * w1
    if order >= 2:
        out["r2"] = (p1 ** 2 + p0 * p2) / 2.0 + p3 / 2.0 - lam * w2
    if not t.ndim:
        out = {k: float(v) for k, v in out.items()}
    return out


def phi(mode: ScalarMode, t):
    """Error functional (4 r r'' - 5 r'^2) / (16 r^{5/2})."""
    d = p_r_eval(mode, t, order=2)
    r, r1, r2 = d["r"], d["r1"], d["r2"]
    return (4.0 * r * r2 - 5.0 * r1 ** 2) / (16.0 * r ** 2.5)


def phi_integral(mode: ScalarMode, t_tail: float = 100.0,
                 tol: float = 1e-10):
    """(int_0^inf |phi|, converged): head by adaptive quadrature, tail by
    decade-ratio extrapolation past t_tail."""
    f = lambda s: abs(float(phi(mode, s)))
    head = adaptive_simpson(f, 0.0, t_tail, tol=tol)
    tail, converged = tail_integral(f, t_tail, tol=tol)
    return head + tail, converged


# -- approximate basis and solution ------------------------------------


@functools.lru_cache(maxsize=256)
def _lg_prefixes(mode: ScalarMode):
    """Cached prefix integrals of the two exponents -p/2 +- sqrt(r)."""

    def exponent(sign):
        def f(s):
            d = p_r_eval(mode, s, order=0)
            return -d["p"] / 2.0 + sign * math.sqrt(d["r"])
        return f

    return PrefixIntegral(exponent(+1.0)), PrefixIntegral(exponent(-1.0))


def lg_basis(mode: ScalarMode, t):
    """(u1, u2, u1', u2') at scalar t.

    u_i(t) = r(t)^{-1/4} exp(int_0^t (-p/2 +- sqrt(r))) and
    u_i' = u_i * (-r'/(4r) - p/2 +- sqrt(r)).
    """
    t = float(t)
    pre_plus, pre_minus = _lg_prefixes(mode)
    d = p_r_eval(mode, t, order=1)
    r, r1, p = d["r"], d["r1"], d["p"]
    amp = r ** -0.25
    u1 = amp * math.exp(pre_plus(t))
    u2 = amp * math.exp(pre_minus(t))
    sq = math.sqrt(r)
    u1p = u1 * (-r1 / (4.0 * r) - p / 2.0 + sq)
    u2p = u2 * (-r1 / (4.0 * r) - p / 2.0 - sq)
    return u1, u2, u1p, u2p


@dataclass(frozen=True)
class LGApprox:
    """Fitted two-term approximate solution with error envelopes."""

    mode: ScalarMode
    a: float
    b: float
    u1: Callable[[float], float]
    u2: Callable[[float], float]
    u1p: Callable[[float], float]
    u2p: Callable[[float], float]
    phi_total: float
    phi_converged: bool
    delta1_env: Callable[[float], float]
    delta2_env: Callable[[float], float]


def fit_ab(mode: ScalarMode, t_tail: float = 100.0,
           tol: float = 1e-10) -> LGApprox:
    """Fit A, B by value-and-derivative collocation at t = 0.

    Solves [u1(0) u2(0); u1'(0) u2'(0)] (A,B)^T = (x0, v0)^T and
    attaches the multiplicative error envelopes
    delta1(t) <= exp(1/2 int_0^t |phi|) - 1 (growing term) and
    delta2(t) <= exp(1/2 int_t^inf |phi|) - 1 (decaying term).
    """
    u10, u20, u1p0, u2p0 = lg_basis(mode, 0.0)
    m = np.array([[u10, u20], [u1p0, u2p0]])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    scale = max(abs(m).max(), 1e-300)
    if abs(det) <= 1e-14 * scale ** 2:
        raise DegenerateBasisError("collocation system at t=0 is singular")
    a, b = np.linalg.solve(m, np.array([mode.x0, mode.v0]))

    total, converged = phi_integral(mode, t_tail=t_tail, tol=tol)
    abs_phi_prefix = PrefixIntegral(lambda s: abs(float(phi(mode, s))))

    def delta1_env(t):
        return math.exp(0.5 * abs_phi_prefix(float(t))) - 1.0

    def delta2_env(t):
        remaining = max(total - abs_phi_prefix(float(t)), 0.0)
        return math.exp(0.5 * remaining) - 1.0

    def u1(t):
        return lg_basis(mode, t)[0]

    def u2(t):
        return lg_basis(mode, t)[1]

    def u1p(t):
        return lg_basis(mode, t)[2]

    def u2p(t):
        return lg_basis(mode, t)[3]

    return LGApprox(mode=mode, a=float(a), b=float(b), u1=u1, u2=u2,
                    u1p=u1p, u2p=u2p, phi_total=total,
                    phi_converged=converged, delta1_env=delta1_env,
                    delta2_env=delta2_env)


def lg_solution(approx: LGApprox, t):
    """(value, lower, upper) at scalar t.

    value = A u1 + B u2; the interval propagates the per-term
    multiplicative envelopes |delta_i| through both terms.
    """
    t = float(t)
    term1 = approx.a * approx.u1(t)
    term2 = approx.b * approx.u2(t)
    value = term1 + term2
    slack = (abs(term1) * approx.delta1_env(t)
             + abs(term2) * approx.delta2_env(t))
    return value, value - slack, value + slack


def expanded_exponent(mode: ScalarMode, t: float,
                      tol: float = 1e-10) -> float:
    """Slow-branch exponent with the higher-order mass terms dropped:

        int_0^t [ -lam/(alpha+beta*lam) - lam^2 eps/(alpha+beta*lam)^3 ].

    Advisory warning when the mass is not small against beta*lam.
    """
    lam, bl = mode.lam, mode.beta * mode.lam
    if float(mode.eps(0.0)) / bl > SMALL_MASS_ADVISORY:
        warnings.warn("mass is not small against beta*lam; the expanded "
                      "exponent is advisory only", stacklevel=2)

    def f(s):
        den = float(mode.alpha(s)) + bl
        return -lam / den - lam ** 2 * float(mode.eps(s)) / den ** 3

    return adaptive_simpson(f, 0.0, float(t), tol=tol)


# -- rate classification -----------------------------------------------


@dataclass(frozen=True)
class RateClass:
    """Verdict of the asymptotic comparison against one reference flow."""

    target: str  # "CN" or "LM"
    verdict: str  # faster / as-fast / slower / ambiguous
    rationale: str


def _dominance(eps: Schedule, alpha: Schedule, grid) -> str:
    """'eps', 'alpha' or 'tie' by strict pointwise majority on the tail
    half of the grid."""
    grid = np.asarray(grid, dtype=float)
    tail = grid[len(grid) // 2:]
    e = np.asarray(eps(tail), dtype=float)
    a = np.asarray(alpha(tail), dtype=float)
    eps_wins = int(np.sum(e > a))
    alpha_wins = int(np.sum(a > e))
    if eps_wins > alpha_wins:
        return "eps"
    if alpha_wins > eps_wins:
        return "alpha"
    return "tie"


def classify_rates(eps: Schedule, alpha: Schedule,
                   grid=None) -> tuple:
    """(verdict vs CN, verdict vs LM) from integrability and dominance.

    vs LM: faster iff the mass is non-integrable, else as fast.
    vs CN: when damping dominates on the tail, slower iff the damping is
    non-integrable, else as fast; when the mass dominates, faster iff the
    mass is non-integrable, else as fast.  Crossing schedules yield an
    ambiguous verdict with both branches reported.
    """
    if grid is None:
        grid = np.linspace(0.0, 200.0, 401)

    eps_ni = eps.integrable_flag == NON_INTEGRABLE
    if eps_ni:
        vs_lm = RateClass("LM", FASTER, "mass schedule non-integrable")
    else:
        vs_lm = RateClass("LM", AS_FAST, "mass schedule integrable")

    dom = _dominance(eps, alpha, grid)
    alpha_ni = alpha.integrable_flag == NON_INTEGRABLE
    if dom == "alpha":
        if alpha_ni:
            vs_cn = RateClass("CN", SLOWER,
                              "damping dominates and is non-integrable")
        else:
            vs_cn = RateClass("CN", AS_FAST,
                              "damping dominates but is integrable")
    elif dom == "eps":
        if eps_ni:
            vs_cn = RateClass("CN", FASTER,
                              "mass dominates and is non-integrable")
        else:
            vs_cn = RateClass("CN", AS_FAST,
                              "mass dominates but is integrable")
    else:
        vs_cn = RateClass(
            "CN", AMBIGUOUS,
            "no strict tail dominance; damping branch would say "
            + (SLOWER if alpha_ni else AS_FAST)
            + ", mass branch would say "
            + (FASTER if eps_ni else AS_FAST))
    return vs_cn, vs_lm


def estimate_decay_rate(series, times, window) -> float:
    """Least-squares slope of log|series| over the time window.

    Underflowed points are dropped by shrinking the window from the
    right; an empty usable window raises.
    """
    s = np.asarray(series, dtype=float)
    t = np.asarray(times, dtype=float)
    t_a, t_b = float(window[0]), float(window[1])
    mask = (t >= t_a) & (t <= t_b)
    s_w, t_w = np.abs(s[mask]), t[mask]
    good = s_w > 0.0
    if good.sum() >= 2 and not good.all():
        # shrink from the right: keep the leading run of positive values
        first_bad = int(np.argmin(good))
        s_w, t_w = s_w[:first_bad], t_w[:first_bad]
    elif good.all():
        pass
    if len(t_w) < 2 or np.any(s_w <= 0.0):
        raise SeriesUnderflowError(
            "series underflowed on the whole fit window")
    slope, _ = np.polyfit(t_w, np.log(s_w), 1)
    return float(slope)


def mode_csv(path, times, x_vm, x_cn, x_lm, x_lg, lower, upper) -> None:
    """Write the per-mode comparison table."""
    import csv as _csv
    cols = [np.asarray(c, dtype=float)
            for c in (times, x_vm, x_cn, x_lm, x_lg, lower, upper)]
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["t", "x_vm", "x_cn", "x_lm", "x_lg",
                    "lg_lower", "lg_upper"])
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
