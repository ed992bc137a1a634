"""Benchmark objective functions and the generic objective interface.

All objectives bundle value, gradient and Hessian callables together with
optional minimizer / strong-convexity metadata.  Evaluation is pure, so
objectives can be shared freely between workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidSpecError, NonConvexRegionError

MU_FLOOR = 1e-8


@dataclass(frozen=True)
class Objective:
    """Evaluation / gradient / Hessian bundle.

    ``minimizer`` and ``mu_hint`` are optional: ``mu_hint`` is a
    strong-convexity modulus valid on the relevant sublevel set.
    """

    name: str
    dimension: int
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    minimizer: Optional[np.ndarray] = None
    mu_hint: Optional[float] = None
    notes: tuple = ()

    def value_at_min(self) -> Optional[float]:
        if self.minimizer is None:
            return None
        return float(self.value(self.minimizer))


@dataclass(frozen=True)
class QuadraticSpec:
    """Either a dense symmetric matrix A or a positive spectrum of A^T A.

    With a spectrum, the orthonormal basis is the identity, i.e. the
    Hessian A^T A is diagonal with the given eigenvalues.
    """

    matrix: Optional[tuple] = None
    spectrum: Optional[tuple] = None

    def __post_init__(self):
        if (self.matrix is None) == (self.spectrum is None):
            raise InvalidSpecError("give exactly one of matrix or spectrum")
        if self.matrix is not None:
            a = np.asarray(self.matrix, dtype=float)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise InvalidSpecError("matrix must be square")
            if not np.allclose(a, a.T, rtol=1e-12, atol=1e-12):
                raise InvalidSpecError("matrix must be symmetric")
            evals = np.linalg.eigvalsh(a.T @ a)
            if evals.min() <= 0:
                raise InvalidSpecError("A^T A must be positive definite")
        else:
            s = np.asarray(self.spectrum, dtype=float)
            if s.size == 0 or np.any(s <= 0):
                raise InvalidSpecError("spectrum must be strictly positive")

    @classmethod
    def from_matrix(cls, a) -> "QuadraticSpec":
        a = np.asarray(a, dtype=float)
        return cls(matrix=tuple(map(tuple, a)))

    @classmethod
    def from_spectrum(cls, eigenvalues) -> "QuadraticSpec":
        return cls(spectrum=tuple(float(v) for v in eigenvalues))

    @property
    def dimension(self) -> int:
        if self.matrix is not None:
            return len(self.matrix)
        return len(self.spectrum)

    def hessian(self) -> np.ndarray:
        """The constant Hessian A^T A."""
        if self.matrix is not None:
            a = np.asarray(self.matrix, dtype=float)
            return a.T @ a
        return np.diag(np.asarray(self.spectrum, dtype=float))

    def lambda_min(self) -> float:
        if self.matrix is not None:
            return float(np.linalg.eigvalsh(self.hessian()).min())
        return float(min(self.spectrum))


def make_quadratic(spec: QuadraticSpec) -> Objective:
    """f(y) = 1/2 ||A y||^2 with minimizer 0."""
    h = spec.hessian()
    n = spec.dimension

    def value(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ h @ x)

    return Objective(
        name="quadratic",
        dimension=n,
        value=value,
        grad=lambda x: h @ np.asarray(x, dtype=float),
        hess=lambda x: h.copy(),
        minimizer=np.zeros(n),
        mu_hint=spec.lambda_min(),
    )


def make_gauss_plus_quad(spec: QuadraticSpec) -> Objective:
    """f(x) = exp(-||x||^2) + 1/2 ||A x||^2.

    The Gaussian bump alone is not convex; its Hessian is bounded below by
    -2 I, so the sum is globally strongly convex when lambda_min(A^T A) > 2.
    Smaller spectra are accepted but flagged in ``notes``.
    """
    h = spec.hessian()
    n = spec.dimension
    lam_min = spec.lambda_min()
    notes = ()
    if lam_min <= 2.0:
        notes = ("lambda_min(A^T A) <= 2: strong convexity only certified "
                 "on sublevel sets",)

    def value(x):
        x = np.asarray(x, dtype=float)
        return float(np.exp(-x @ x) + 0.5 * (x @ h @ x))

    def grad(x):
        x = np.asarray(x, dtype=float)
        return -2.0 * x * np.exp(-x @ x) + h @ x

    def hess(x):
        x = np.asarray(x, dtype=float)
        e = np.exp(-x @ x)
        return e * (4.0 * np.outer(x, x) - 2.0 * np.eye(n)) + h

    return Objective(
        name="gauss_quad",
        dimension=n,
        value=value,
        grad=grad,
        hess=hess,
        minimizer=np.zeros(n),
        mu_hint=max(lam_min - 2.0, MU_FLOOR),
        notes=notes,
    )


def make_logsumexp_plus_quad(spec: QuadraticSpec) -> Objective:
    """f(x) = log(sum_i e^{x_i} + e^{-x_i}) + 1/2 ||A x||^2, overflow-safe."""
    h = spec.hessian()
    n = spec.dimension

    def _weights(x):
        # max-shift so the largest exponent is 0
        m = np.abs(x).max(initial=0.0)
        ep = np.exp(x - m)
        en = np.exp(-x - m)
        s = float(np.sum(ep + en))
        return m, ep, en, s

    def value(x):
        x = np.asarray(x, dtype=float)
        m, _, _, s = _weights(x)
        return float(np.log(s) + m + 0.5 * (x @ h @ x))

    def grad(x):
        x = np.asarray(x, dtype=float)
        _, ep, en, s = _weights(x)
        return (ep - en) / s + h @ x

    def hess(x):
        x = np.asarray(x, dtype=float)
        _, ep, en, s = _weights(x)
        g = (ep - en) / s
        return np.diag((ep + en) / s) - np.outer(g, g) + h

    return Objective(
        name="logsumexp_quad",
        dimension=n,
        value=value,
        grad=grad,
        hess=hess,
        minimizer=np.zeros(n),
        mu_hint=spec.lambda_min(),
    )


def make_poly50_plus_quad(spec: QuadraticSpec) -> Objective:
    """f(x) = sum_i x_i^50 + 1/2 ||A x||^2."""
    h = spec.hessian()
    n = spec.dimension

    def value(x):
        x = np.asarray(x, dtype=float)
        return float(np.sum(x ** 50) + 0.5 * (x @ h @ x))

    def grad(x):
        x = np.asarray(x, dtype=float)
        return 50.0 * x ** 49 + h @ x

    def hess(x):
        x = np.asarray(x, dtype=float)
        return np.diag(2450.0 * x ** 48) + h

    return Objective(
        name="poly50_quad",
        dimension=n,
        value=value,
        grad=grad,
        hess=hess,
        minimizer=np.zeros(n),
        mu_hint=spec.lambda_min(),
    )


OBJECTIVE_FAMILIES = {
    "quadratic": make_quadratic,
    "gauss_quad": make_gauss_plus_quad,
    "logsumexp_quad": make_logsumexp_plus_quad,
    "poly50_quad": make_poly50_plus_quad,
}


def estimate_mu(obj: Objective, samples, floor: float = MU_FLOOR) -> float:
    """Smallest Hessian eigenvalue over the sample points, floored.

    For quadratics (constant Hessian) this is exact regardless of samples.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("samples must be nonempty")
    mins = [float(np.linalg.eigvalsh(obj.hess(np.asarray(x, dtype=float))).min())
            for x in samples]
    if max(mins) <= 0:
        raise NonConvexRegionError("all sampled Hessians are indefinite")
    return max(min(mins), floor)
