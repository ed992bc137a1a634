"""Numerical laboratory for damped Newton flows with a vanishing mass.

Continuous dynamics of the form

    eps(t) x'' + alpha(t) x' + beta * H(x) x' + grad f(x) = 0

with a non-increasing variable mass eps and damping alpha, together with
its two classical degenerations (eps = 0: damped Newton flow; eps =
alpha = 0: pure Newton flow).  The package bundles semi-implicit
integrators, certified distance bounds between the flows, a
Liouville-Green closed-form surrogate for quadratic modes, convergence
rate classification, and a CLI for reproducible experiment runs.
"""

__version__ = "0.1.0"
