"""Semi-implicit Euler schemes for the three dynamics, trajectory
recording, and the energy diagnostic.

All three schemes advance by solving one shifted-Hessian linear system
per step.  Setting the variable mass to zero reproduces the damped
Newton (LM) step and additionally zeroing the damping reproduces the
pure Newton step; those degenerations are exact because the reduced
cases delegate to the same code path (identical linear systems).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import DivergenceError, SingularSystemError
from .objectives import Objective
from .schedules import Schedule

SCHEMES = ("CN", "LM", "VM")

RESIDUAL_RTOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    gamma: float
    beta: float
    horizon: float
    x0: np.ndarray
    v0: Optional[np.ndarray] = None
    scheme: str = "VM"

    def __post_init__(self):
        if self.gamma <= 0 or self.beta <= 0:
            raise ValueError("gamma and beta must be positive")
        if self.horizon < self.gamma:
            raise ValueError("horizon must be at least one step")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "x0", x0)
        v0 = (np.zeros_like(x0) if self.v0 is None
              else np.atleast_1d(np.asarray(self.v0, dtype=float)))
        if v0.shape != x0.shape:
            raise ValueError("x0 and v0 dimensions differ")
        object.__setattr__(self, "v0", v0)


@dataclass
class Trajectory:
    """Uniform-grid record of one integration.

    velocities are backward differences (x_k - x_{k-1})/gamma with the
    configured initial velocity at k=0.
    """

    scheme: str
    gamma: float
    times: np.ndarray
    states: np.ndarray          # (K+1, n)
    velocities: np.ndarray      # (K+1, n)
    cond_estimates: np.ndarray  # (K,)
    residuals: np.ndarray       # (K,)
    warnings: tuple = ()

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def to_csv(self, path) -> None:
        n = self.states.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x_{i}" for i in range(n)])
            for t, x in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in x])

    def diagnostics_to_csv(self, path, eps: Schedule, obj: Objective) -> None:
        u = lyapunov_series(self, eps, obj)
        xstar = obj.minimizer
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "U", "grad_norm", "dist_to_opt"])
            for k, t in enumerate(self.times):
                gn = float(np.linalg.norm(obj.grad(self.states[k])))
                d = (float(np.linalg.norm(self.states[k] - xstar))
                     if xstar is not None else float("nan"))
                w.writerow([repr(float(t)), repr(float(u[k])), repr(gn),
                            repr(d)])


def solve_spd(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve M z = b for symmetric, intendedly positive definite M.

    Tries a Cholesky route first and falls back to a pivoted symmetric
    factorization; the residual is verified against 1e-10 * ||b||.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    b_arr = np.atleast_1d(np.asarray(b, dtype=float))
    try:
        c, low = scipy.linalg.cho_factor(m, check_finite=False)
        z = scipy.linalg.cho_solve((c, low), b_arr, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        try:
            z = scipy.linalg.solve(m, b_arr, assume_a="sym",
                                   check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise SingularSystemError(f"linear solve failed: {exc}") from exc
    if not np.all(np.isfinite(z)):
        raise SingularSystemError("linear solve produced non-finite values")
    bnorm = float(np.linalg.norm(b_arr))
    res = float(np.linalg.norm(m @ z - b_arr))
    if res > RESIDUAL_RTOL * max(bnorm, 1e-300):
        raise SingularSystemError(
            f"residual {res:g} exceeds tolerance for ||b||={bnorm:g}")
    return z


def step_cn(obj: Objective, x_k: np.ndarray, gamma: float,
            beta: float) -> np.ndarray:
    """x_{k+1} = x_k - gamma [beta H(x_k)]^{-1} grad(x_k)."""
    x_k = np.atleast_1d(np.asarray(x_k, dtype=float))
    g = obj.grad(x_k)
    z = solve_spd(beta * np.atleast_2d(obj.hess(x_k)), g)
    return x_k - gamma * z


def step_lm(obj: Objective, x_k: np.ndarray, gamma: float, beta: float,
            alpha_k: float) -> np.ndarray:
    """x_{k+1} = x_k - gamma [alpha_k I + beta H(x_k)]^{-1} grad(x_k)."""
    if alpha_k < 0:
        raise ValueError("alpha_k must be nonnegative")
    if alpha_k == 0.0:
        return step_cn(obj, x_k, gamma, beta)
    x_k = np.atleast_1d(np.asarray(x_k, dtype=float))
    g = obj.grad(x_k)
    m = alpha_k * np.eye(len(x_k)) + beta * np.atleast_2d(obj.hess(x_k))
    return x_k - gamma * solve_spd(m, g)


def step_vm(obj: Objective, x_k: np.ndarray, x_km1: np.ndarray,
            gamma: float, beta: float, eps_k: float,
            alpha_k: float) -> np.ndarray:
    """Variable-mass step.

    x_{k+1} = x_k + [(eps_k + gamma*alpha_k) I + gamma*beta H]^{-1}
                    (eps_k (x_k - x_{k-1}) - gamma^2 grad(x_k)).
    """
    if eps_k < 0 or alpha_k < 0:
        raise ValueError("eps_k and alpha_k must be nonnegative")
    if eps_k == 0.0:
        return step_lm(obj, x_k, gamma, beta, alpha_k)
    x_k = np.atleast_1d(np.asarray(x_k, dtype=float))
    x_km1 = np.atleast_1d(np.asarray(x_km1, dtype=float))
    g = obj.grad(x_k)
    m = ((eps_k + gamma * alpha_k) * np.eye(len(x_k))
         + gamma * beta * np.atleast_2d(obj.hess(x_k)))
    rhs = eps_k * (x_k - x_km1) - gamma ** 2 * g
    return x_k + solve_spd(m, rhs)


def _cond_estimate(m: np.ndarray) -> float:
    if m.shape[0] == 1:
        return 1.0
    return float(np.linalg.cond(m))


def integrate(obj: Objective, eps: Schedule, alpha: Schedule,
              cfg: SolverConfig, warnings: tuple = ()) -> Trajectory:
    """Run the selected scheme to the horizon on a uniform grid.

    The variable-mass scheme encodes the initial velocity through the
    virtual state x^{(-1)} = x0 - gamma*v0; the other schemes are
    one-point recursions and ignore v0.
    """
    gamma, beta = cfg.gamma, cfg.beta
    n_steps = int(np.floor(cfg.horizon / gamma + 1e-12))
    x = cfg.x0.copy()
    x_prev = x - gamma * cfg.v0
    n = len(x)

    times = gamma * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1, n))
    states[0] = x
    conds = np.empty(n_steps)
    resids = np.empty(n_steps)

    for k in range(n_steps):
        t_k = times[k]
        eps_k = float(eps(t_k)) if cfg.scheme == "VM" else 0.0
        alpha_k = float(alpha(t_k)) if cfg.scheme != "CN" else 0.0
        hess = np.atleast_2d(obj.hess(x))
        g = obj.grad(x)
        # a zero coefficient reduces the update to the simpler scheme's
        # exact linear system, so degenerate runs coincide bit-for-bit
        if eps_k > 0.0:
            m = ((eps_k + gamma * alpha_k) * np.eye(n)
                 + gamma * beta * hess)
            rhs = eps_k * (x - x_prev) - gamma ** 2 * g
        elif alpha_k > 0.0:
            m = alpha_k * np.eye(n) + beta * hess
            rhs = -gamma * g
        else:
            m = beta * hess
            rhs = -gamma * g
        try:
            dx = solve_spd(m, rhs)
        except SingularSystemError as exc:
            raise SingularSystemError(str(exc), step_index=k,
                                      time=float(t_k)) from exc
        x_new = x + dx
        if not np.all(np.isfinite(x_new)):
            raise DivergenceError(
                f"non-finite state at step {k + 1}", last_valid_index=k)
        conds[k] = _cond_estimate(m)
        rnorm = float(np.linalg.norm(rhs))
        resids[k] = float(np.linalg.norm(m @ dx - rhs)) / max(rnorm, 1e-300)
        x_prev, x = x, x_new
        states[k + 1] = x

    velocities = np.empty_like(states)
    velocities[0] = cfg.v0
    velocities[1:] = np.diff(states, axis=0) / gamma
    return Trajectory(scheme=cfg.scheme, gamma=gamma, times=times,
                      states=states, velocities=velocities,
                      cond_estimates=conds, residuals=resids,
                      warnings=warnings)


def lyapunov_series(traj: Trajectory, eps: Schedule,
                    obj: Objective) -> np.ndarray:
    """U_k = eps(t_k)/2 ||v_k||^2 + f(x_k) - f(x*) along the trajectory.

    Uses the known minimizer value when available, otherwise the best
    value seen on the trajectory.
    """
    fvals = np.array([obj.value(x) for x in traj.states])
    fstar = obj.value_at_min()
    if fstar is None:
        fstar = float(fvals.min())
    eps_vals = np.asarray(eps(traj.times), dtype=float)
    v2 = np.sum(traj.velocities ** 2, axis=1)
    return eps_vals / 2.0 * v2 + fvals - fstar
