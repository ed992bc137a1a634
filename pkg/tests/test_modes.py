import math

import numpy as np
import pytest

from vmlab.errors import (
    AssumptionViolatedError,
    DegenerateBasisError,
    SeriesUnderflowError,
)
from vmlab.integrators import SolverConfig, integrate
from vmlab.modes import (
    AMBIGUOUS,
    AS_FAST,
    FASTER,
    SLOWER,
    ScalarMode,
    classify_rates,
    closed_form_cn,
    closed_form_lm,
    eigenmodes,
    estimate_decay_rate,
    expanded_exponent,
    fit_ab,
    lg_basis,
    lg_solution,
    mode_csv,
    p_r_eval,
    phi,
    phi_integral,
)
from vmlab.objectives import QuadraticSpec, make_quadratic
from vmlab.schedules import Schedule


def mode(lam=1.0, beta=1.0, eps=None, alpha=None, x0=1.0, v0=0.0):
    return ScalarMode(lam=lam, beta=beta,
                      eps=eps or Schedule.power(0.1, 2.0),
                      alpha=alpha or Schedule.zero(), x0=x0, v0=v0)


class TestEigenmodes:
    def test_diagonal_matrix_identity_basis(self):
        spec = QuadraticSpec.from_spectrum([1.0, 4.0])
        dec = eigenmodes(spec, 1.0, Schedule.power(0.1, 2.0),
                         Schedule.zero(), np.array([2.0, 3.0]))
        assert {m.lam for m in dec.modes} == {1.0, 4.0}
        assert {m.x0 for m in dec.modes} == {2.0, 3.0}

    def test_coupled_matrix_eigenvalues(self):
        spec = QuadraticSpec.from_matrix([[2.0, 1.0], [1.0, 2.0]])
        dec = eigenmodes(spec, 1.0, Schedule.power(0.1, 2.0),
                         Schedule.zero(), np.array([1.0, 0.0]))
        lams = sorted(m.lam for m in dec.modes)
        assert lams == pytest.approx([1.0, 9.0])

    def test_reconstruction_roundtrip(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((4, 4))
        spec = QuadraticSpec.from_matrix((a + a.T) / 2.0 + 4.0 * np.eye(4))
        x0 = rng.standard_normal(4)
        dec = eigenmodes(spec, 1.0, Schedule.power(0.1, 2.0),
                         Schedule.zero(), x0)
        back = dec.reconstruct(np.array([m.x0 for m in dec.modes]))
        assert np.allclose(back, x0, atol=1e-12)


class TestClosedForms:
    def test_cn_basics(self):
        assert closed_form_cn(3.0, 1.0, 0.0) == 3.0
        assert closed_form_cn(1.0, 1.0, 1.0) == pytest.approx(math.exp(-1))
        # lam never enters
        assert closed_form_cn(1.0, 2.0, 4.0) == pytest.approx(math.exp(-2))

    def test_lm_zero_damping_equals_cn(self):
        m = mode(alpha=Schedule.zero())
        for t in [0.0, 1.0, 7.0]:
            assert closed_form_lm(m, t) == pytest.approx(
                closed_form_cn(m.x0, m.beta, t), rel=1e-12)

    def test_lm_constant_damping(self):
        m = mode(lam=2.0, beta=1.0, alpha=Schedule.constant(0.5))
        t = 3.0
        assert closed_form_lm(m, t) == pytest.approx(
            math.exp(-2.0 * t / 2.5), rel=1e-12)

    def test_lm_hyperbolic_damping_vs_quadrature(self):
        a0, lam, beta = 0.7, 2.0, 1.5
        m = mode(lam=lam, beta=beta, alpha=Schedule.power(a0, 1.0))
        # compare the logarithmic antiderivative against brute quadrature
        from vmlab.quadrature import adaptive_simpson
        for t in [0.5, 3.0, 12.0]:
            ex = adaptive_simpson(
                lambda s: lam / (a0 / (s + 1.0) + beta * lam), 0.0, t,
                tol=1e-12)
            assert closed_form_lm(m, t) == pytest.approx(
                m.x0 * math.exp(-ex), rel=1e-8)

    def test_lm_generic_schedule_uses_quadrature(self):
        m = mode(alpha=Schedule.power(1.0, 2.0))
        from vmlab.quadrature import adaptive_simpson
        t = 4.0
        ex = adaptive_simpson(
            lambda s: 1.0 / (1.0 / (s + 1.0) ** 2 + 1.0), 0.0, t, tol=1e-12)
        assert closed_form_lm(m, t) == pytest.approx(math.exp(-ex),
                                                     rel=1e-8)


class TestPREval:
    def test_constant_mass_hand_values(self):
        m = mode(eps=Schedule.constant(0.1))
        d = p_r_eval(m, 0.0)
        assert d["p"] == pytest.approx(10.0)
        assert d["p1"] == 0.0
        assert d["r"] == pytest.approx(15.0)
        assert d["r1"] == 0.0 and d["r2"] == 0.0

    def test_power_mass_hand_values(self):
        m = mode(eps=Schedule.power(0.1, 2.0))
        d = p_r_eval(m, 0.0)
        assert d["p"] == pytest.approx(10.0)
        assert d["p1"] == pytest.approx(20.0)
        assert d["r"] == pytest.approx(25.0)

    def test_r1_matches_finite_differences(self):
        m = mode(eps=Schedule.power(0.1, 2.0),
                 alpha=Schedule.power(0.5, 1.0))
        h = 1e-5
        for t in [0.5, 2.0, 10.0]:
            d = p_r_eval(m, t)
            fd = (p_r_eval(m, t + h)["r"] - p_r_eval(m, t - h)["r"]) / (2 * h)
            assert d["r1"] == pytest.approx(fd, rel=1e-6)
            fd2 = (p_r_eval(m, t + h)["r1"]
                   - p_r_eval(m, t - h)["r1"]) / (2 * h)
            assert d["r2"] == pytest.approx(fd2, rel=1e-5)

    def test_large_mass_rejected(self):
        # eps0 = 0.5 with lam = beta = 1 makes r(0) negative
        m = mode(eps=Schedule.constant(0.5))
        with pytest.raises(AssumptionViolatedError):
            p_r_eval(m, 0.0)


class TestPhi:
    def test_constant_coefficients_vanish(self):
        m = mode(eps=Schedule.constant(0.1), alpha=Schedule.constant(0.2))
        assert phi(m, 1.7) == 0.0
        total, conv = phi_integral(m, t_tail=10.0)
        assert total == 0.0

    def test_decaying_mass_finite_integral(self):
        m = mode(eps=Schedule.power(0.1, 2.0))
        total, conv = phi_integral(m)
        assert conv
        assert 0.0 < total < 1.0


class TestLgBasis:
    def test_at_zero(self):
        m = mode()
        u1, u2, _, _ = lg_basis(m, 0.0)
        r0 = p_r_eval(m, 0.0)["r"]
        assert u1 == pytest.approx(r0 ** -0.25)
        assert u2 == pytest.approx(r0 ** -0.25)

    def test_slow_branch_dominates(self):
        m = mode()
        u1a, u2a, _, _ = lg_basis(m, 5.0)
        u1b, u2b, _, _ = lg_basis(m, 10.0)
        assert u2a / u1a > u2b / u1b  # ratio shrinks with t

    def test_derivatives_match_finite_differences(self):
        m = mode()
        h = 1e-6
        for t in [0.5, 3.0]:
            u1, u2, u1p, u2p = lg_basis(m, t)
            f1 = (lg_basis(m, t + h)[0] - lg_basis(m, t - h)[0]) / (2 * h)
            f2 = (lg_basis(m, t + h)[1] - lg_basis(m, t - h)[1]) / (2 * h)
            assert u1p == pytest.approx(f1, rel=1e-5)
            assert u2p == pytest.approx(f2, rel=1e-5)


class TestFitAndSolution:
    def test_zero_initial_data(self):
        m = mode(x0=0.0, v0=0.0)
        ap = fit_ab(m)
        assert ap.a == 0.0 and ap.b == 0.0
        v, lo, hi = lg_solution(ap, 3.0)
        assert v == lo == hi == 0.0

    def test_initial_condition_reproduced(self):
        m = mode(x0=2.0, v0=-1.0)
        ap = fit_ab(m)
        v, _, _ = lg_solution(ap, 0.0)
        assert v == pytest.approx(2.0, rel=1e-12)
        dv = ap.a * ap.u1p(0.0) + ap.b * ap.u2p(0.0)
        assert dv == pytest.approx(-1.0, rel=1e-10)

    def test_constant_coefficients_exact(self):
        eps0, a0, lam, beta = 0.05, 0.2, 1.0, 1.0
        m = ScalarMode(lam, beta, Schedule.constant(eps0),
                       Schedule.constant(a0), x0=1.0, v0=0.0)
        ap = fit_ab(m)
        r1, r2 = np.roots([eps0, a0 + beta * lam, lam])
        c1 = -r2 / (r1 - r2)
        c2 = r1 / (r1 - r2)
        for t in [0.0, 1.0, 5.0, 10.0]:
            v, lo, hi = lg_solution(ap, t)
            exact = c1 * math.exp(r1 * t) + c2 * math.exp(r2 * t)
            assert v == pytest.approx(exact, rel=1e-8)
            assert lo == pytest.approx(hi)  # phi == 0: degenerate interval

    def test_envelope_shapes(self):
        m = mode(eps=Schedule.power(0.1, 2.0))
        ap = fit_ab(m)
        assert ap.delta1_env(0.0) == 0.0
        d1 = [ap.delta1_env(t) for t in [1.0, 5.0, 20.0]]
        assert d1 == sorted(d1)
        d2 = [ap.delta2_env(t) for t in [1.0, 5.0, 20.0]]
        assert d2 == sorted(d2, reverse=True)
        cap = math.exp(0.5 * ap.phi_total) - 1.0
        assert max(d1) <= cap + 1e-12
        assert max(d2) <= cap + 1e-12

    def test_interval_contains_fine_integration(self):
        m = mode(eps=Schedule.power(0.1, 2.0), x0=1.0, v0=0.0)
        ap = fit_ab(m)
        obj = make_quadratic(QuadraticSpec.from_spectrum([m.lam]))
        cfg = SolverConfig(gamma=1e-3, beta=m.beta, horizon=10.0,
                           x0=np.array([1.0]), scheme="VM")
        tr = integrate(obj, m.eps, m.alpha, cfg)
        idx = np.searchsorted(tr.times, [2.0, 5.0, 8.0])
        for i in idx:
            v, lo, hi = lg_solution(ap, tr.times[i])
            x = tr.states[i, 0]
            slack = 0.05 * abs(x)  # discretization allowance
            assert lo - slack <= x <= hi + slack


class TestExpandedExponent:
    def test_zero_mass_matches_lm_exponent(self):
        m = mode(eps=Schedule.constant(0.0), alpha=Schedule.constant(0.5))
        # the mass advisory does not fire for a zero mass
        ex = expanded_exponent(m, 4.0)
        assert ex == pytest.approx(-4.0 / 1.5, rel=1e-10)

    def test_zero_damping_closed_form(self):
        eps0 = 0.05
        m = mode(eps=Schedule.power(eps0, 2.0))
        t = 6.0
        # integral of eps: eps0 * (1 - 1/(t+1))
        want = -t - eps0 * (1.0 - 1.0 / (t + 1.0))
        assert expanded_exponent(m, t) == pytest.approx(want, rel=1e-8)

    def test_gap_to_exact_shrinks_with_mass(self):
        from vmlab.modes import _lg_prefixes
        gaps = []
        for eps0 in (0.1, 0.01, 0.001):
            m = mode(eps=Schedule.power(eps0, 2.0))
            pre_plus, _ = _lg_prefixes(m)
            exact = pre_plus(5.0)
            gaps.append(abs(exact - expanded_exponent(m, 5.0)))
        assert gaps[0] > gaps[1] > gaps[2]

    def test_large_mass_advisory(self):
        m = mode(eps=Schedule.power(0.2, 2.0))
        with pytest.warns(UserWarning):
            expanded_exponent(m, 1.0)


class TestClassifier:
    def test_nonintegrable_mass_dominant(self):
        vs_cn, vs_lm = classify_rates(Schedule.power(1.0, 1.0),
                                      Schedule.zero())
        assert vs_cn.verdict == FASTER
        assert vs_lm.verdict == FASTER

    def test_nonintegrable_damping_dominant(self):
        vs_cn, vs_lm = classify_rates(Schedule.power(0.1, 3.0),
                                      Schedule.power(1.0, 1.0))
        assert vs_cn.verdict == SLOWER
        assert vs_lm.verdict == AS_FAST

    def test_integrable_mass_vs_lm(self):
        _, vs_lm = classify_rates(Schedule.power(1.0, 2.0),
                                  Schedule.zero())
        assert vs_lm.verdict == AS_FAST

    def test_integrable_damping_dominant(self):
        vs_cn, _ = classify_rates(Schedule.power(0.1, 3.0),
                                  Schedule.power(1.0, 2.0))
        assert vs_cn.verdict == AS_FAST

    def test_identical_schedules_ambiguous(self):
        s = Schedule.power(1.0, 1.0)
        vs_cn, _ = classify_rates(s, s)
        assert vs_cn.verdict == AMBIGUOUS
        assert "branch" in vs_cn.rationale


class TestDecayRate:
    def test_exact_exponential(self):
        t = np.linspace(0.0, 10.0, 1001)
        assert estimate_decay_rate(np.exp(-t), t, (1.0, 9.0)) == \
            pytest.approx(-1.0, abs=1e-6)

    def test_beta_two(self):
        t = np.linspace(0.0, 10.0, 1001)
        assert estimate_decay_rate(np.exp(-t / 2.0), t, (1.0, 9.0)) == \
            pytest.approx(-0.5, abs=1e-6)

    def test_cn_scheme_slope(self):
        obj = make_quadratic(QuadraticSpec.from_spectrum([1.0, 4.0]))
        cfg = SolverConfig(gamma=0.01, beta=1.0, horizon=10.0,
                           x0=np.array([1.0, 1.0]), scheme="CN")
        tr = integrate(obj, Schedule.zero(), Schedule.zero(), cfg)
        norms = np.linalg.norm(tr.states, axis=1)
        slope = estimate_decay_rate(norms, tr.times, (1.0, 9.0))
        assert slope == pytest.approx(-1.0, abs=0.02)

    def test_underflow_window_shrinks(self):
        t = np.linspace(0.0, 10.0, 101)
        s = np.exp(-t)
        s[60:] = 0.0  # hard underflow in the window tail
        slope = estimate_decay_rate(s, t, (1.0, 9.0))
        assert slope == pytest.approx(-1.0, abs=1e-6)

    def test_all_zero_raises(self):
        t = np.linspace(0.0, 10.0, 101)
        with pytest.raises(SeriesUnderflowError):
            estimate_decay_rate(np.zeros_like(t), t, (1.0, 9.0))


def test_mode_csv_columns(tmp_path):
    t = np.linspace(0.0, 1.0, 5)
    path = tmp_path / "mode.csv"
    mode_csv(path, t, t, t, t, t, t - 0.1, t + 0.1)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert list(data.dtype.names) == ["t", "x_vm", "x_cn", "x_lm", "x_lg",
                                      "lg_lower", "lg_upper"]


def test_degenerate_basis_detected():
    # a mode whose two basis columns coincide cannot be fitted; force the
    # situation by monkeypatching r to a configuration with sqrt(r) = 0
    # is artificial, so instead check the error type exists and fires on
    # an exactly singular 2x2 system via duplicated initial columns
    import vmlab.modes as modes_mod

    m = mode()
    orig = modes_mod.lg_basis
    try:
        modes_mod.lg_basis = lambda md, t: (1.0, 1.0, 2.0, 2.0)
        with pytest.raises(DegenerateBasisError):
            fit_ab(m)
    finally:
        modes_mod.lg_basis = orig
