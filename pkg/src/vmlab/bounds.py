"""Non-asymptotic distance-bound envelopes between the three flows.

Three envelope families are provided:

* ``cn_gap``: distance to the pure Newton flow with fully explicit
  constants derived from the energy level, the convexity modulus and the
  schedule-decay constants;
* ``cn_gap_simple``: the same bound collapsed to two terms, valid when
  the mass decays slower than exponential rate 2/beta;
* ``general_shape``: the qualitative envelope shape with unit constant,
  serving both the Newton-distance and the damped-Newton-distance
  comparisons; the minimal constant is fitted a posteriori.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlignmentError,
    AssumptionViolatedError,
    DegenerateFitError,
    InvalidModulusError,
)
from .quadrature import (
    ADAPTIVE,
    QuadratureRule,
    adaptive_simpson,
    exp_weighted_series,
)
from .schedules import Schedule

ENVELOPE_KINDS = ("cn_gap", "cn_gap_simple", "general_cn", "general_lm")

# relative closeness of c1 to its pole 2/beta that triggers a warning
POLE_WARN_FRACTION = 0.99


@dataclass(frozen=True)
class BoundEnvelope:
    """One evaluated envelope B(t_k) with the constants that built it."""

    kind: str
    times: np.ndarray
    values: np.ndarray
    constants: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    advisory: bool = False

    def __post_init__(self):
        if self.kind not in ENVELOPE_KINDS:
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        v = np.asarray(self.values, dtype=float)
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise ValueError("envelope values must be nonnegative and finite")


def weighted_exp_integral(g, t: float, beta: float,
                          rule: QuadratureRule = QuadratureRule(),
                          grid=None) -> float:
    """int_0^t e^{(s-t)/beta} g(s) ds.

    ``g`` is a callable for the adaptive rule; for the grid rule pass the
    trajectory grid (the integrand is sampled on it).
    """
    if t == 0.0:
        return 0.0
    if rule.kind == ADAPTIVE:
        return adaptive_simpson(lambda s: math.exp((s - t) / beta) * g(s),
                                0.0, t, tol=rule.tol)
    if grid is None:
        raise ValueError("grid rule needs the sample grid")
    grid = np.asarray(grid, dtype=float)
    mask = grid <= t + 1e-12
    sub = grid[mask]
    vals = np.array([g(s) for s in sub])
    series = exp_weighted_series(vals, sub, beta)
    return float(series[-1])


def cn_gap_constants(u0: float, mu: float, beta: float, c1: float,
                     c2: float) -> tuple:
    """(C0, C1, C2) for the explicit Newton-distance bound.

    C0 = 1/(beta*mu), C1 = sqrt(2 u0)/(beta*mu),
    C2 = C1 * (1/beta + c1 + c2).
    """
    if mu <= 0:
        raise InvalidModulusError("convexity modulus must be positive")
    c0 = 1.0 / (beta * mu)
    c1_const = math.sqrt(2.0 * u0) / (beta * mu)
    c2_const = c1_const * (1.0 / beta + c1 + c2)
    return c0, c1_const, c2_const


def cn_gap_envelope(eps: Schedule, consts: tuple, eps0: float,
                    v0_norm: float, beta: float, grid,
                    advisory: bool = False,
                    inputs: dict = None) -> BoundEnvelope:
    """B(t) = C0 e^{-t/beta} eps0 ||v0|| + C1 sqrt(eps) + C2 * I(t)

    with I(t) the exponentially weighted integral of sqrt(eps).
    """
    c0, c1, c2 = consts
    grid = np.asarray(grid, dtype=float)
    sqrt_eps = np.sqrt(np.asarray(eps(grid), dtype=float))
    integral = exp_weighted_series(sqrt_eps, grid, beta)
    values = (c0 * np.exp(-grid / beta) * eps0 * v0_norm
              + c1 * sqrt_eps + c2 * integral)
    return BoundEnvelope(
        kind="cn_gap", times=grid, values=values,
        constants={"C0": c0, "C1": c1, "C2": c2},
        inputs=dict(inputs or {}), advisory=advisory)


def cn_gap_simple_envelope(eps: Schedule, consts: tuple, c1_decay: float,
                           eps0: float, v0_norm: float, beta: float,
                           grid, advisory: bool = False,
                           inputs: dict = None) -> BoundEnvelope:
    """Two-term form B(t) = C0 e^{-t/beta} eps0 ||v0|| + C3 sqrt(eps(t)).

    Requires the mass-decay constant c1 < 2/beta; the collapsed constant
    is C3 = C1 + C2 * 2/(2 - c1*beta), which blows up at the pole.
    """
    if c1_decay >= 2.0 / beta:
        raise AssumptionViolatedError(
            "two-term bound needs the mass-decay constant below 2/beta")
    if c1_decay >= POLE_WARN_FRACTION * 2.0 / beta:
        warnings.warn("mass-decay constant is near the pole 2/beta; "
                      "collapsed constant is very large", stacklevel=2)
    c0, c1, c2 = consts
    c3 = c1 + c2 * 2.0 / (2.0 - c1_decay * beta)
    grid = np.asarray(grid, dtype=float)
    sqrt_eps = np.sqrt(np.asarray(eps(grid), dtype=float))
    values = c0 * np.exp(-grid / beta) * eps0 * v0_norm + c3 * sqrt_eps
    return BoundEnvelope(
        kind="cn_gap_simple", times=grid, values=values,
        constants={"C0": c0, "C3": c3},
        inputs=dict(inputs or {}), advisory=advisory)


def general_shape_envelope(eps: Schedule, alpha: Schedule, beta: float,
                           grid, kind: str = "general_cn",
                           inputs: dict = None) -> BoundEnvelope:
    """Unit-constant shape

        e^{-t/beta} + sqrt(eps(t)) + alpha(t)
        + int_0^t e^{(s-t)/beta} (sqrt(eps(s)) + alpha(s)) ds.

    The same shape serves the Newton-distance and damped-Newton-distance
    comparisons; callers fit the minimal constant separately.
    """
    if kind not in ("general_cn", "general_lm"):
        raise ValueError("kind must be general_cn or general_lm")
    grid = np.asarray(grid, dtype=float)
    sqrt_eps = np.sqrt(np.asarray(eps(grid), dtype=float))
    alpha_vals = np.asarray(alpha(grid), dtype=float)
    integral = exp_weighted_series(sqrt_eps + alpha_vals, grid, beta)
    values = np.exp(-grid / beta) + sqrt_eps + alpha_vals + integral
    return BoundEnvelope(kind=kind, times=grid, values=values,
                         constants={"C": 1.0}, inputs=dict(inputs or {}))


def fit_constant(distances, shape) -> float:
    """Smallest C with distances <= C * shape on the grid (max ratio)."""
    d = np.asarray(distances, dtype=float)
    s = np.asarray(shape, dtype=float)
    if d.shape != s.shape:
        raise AlignmentError("distance and shape series differ in length")
    if np.any(s <= 0.0):
        raise DegenerateFitError("shape series has a non-positive value")
    return float(np.max(d / s))


def distance_series(traj_a, traj_b) -> np.ndarray:
    """Pointwise Euclidean distance between two same-grid trajectories."""
    if len(traj_a.times) != len(traj_b.times) or not np.allclose(
            traj_a.times, traj_b.times, rtol=0.0, atol=1e-12):
        raise AlignmentError("trajectories are not on the same time grid")
    return np.linalg.norm(traj_a.states - traj_b.states, axis=1)


def envelope_to_csv(path, times, distances, envelope: BoundEnvelope,
                    sidecar_path=None) -> None:
    """Write `t,distance,envelope,ratio` rows plus a constants sidecar."""
    d = np.asarray(distances, dtype=float)
    e = np.asarray(envelope.values, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "distance", "envelope", "ratio"])
        for t, dk, ek in zip(times, d, e):
            ratio = dk / ek if ek > 0 else float("nan")
            w.writerow([repr(float(t)), repr(float(dk)), repr(float(ek)),
                        repr(float(ratio))])
    if sidecar_path is not None:
        meta = {"kind": envelope.kind, "constants": envelope.constants,
                "inputs": envelope.inputs, "advisory": envelope.advisory}
        with open(sidecar_path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
