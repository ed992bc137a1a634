import numpy as np
import pytest

from vmlab.errors import DegenerateScheduleError, UnsupportedDerivativeError
from vmlab.schedules import (
    INTEGRABLE,
    NON_INTEGRABLE,
    UNKNOWN,
    Schedule,
    assumption_grid,
    check_mass_dominated,
    check_small_initial_mass,
    check_subexponential,
    check_tail_integrability,
)


class TestEvaluation:
    def test_power_values(self):
        s = Schedule.power(2.0, 1.0)
        assert s(0.0) == 2.0
        assert s(1.0) == 1.0
        assert np.allclose(s(np.array([0.0, 3.0])), [2.0, 0.5])

    def test_power_derivatives_match_finite_differences(self):
        s = Schedule.power(0.7, 1.5)
        h = 1e-6
        for t in [0.0, 0.5, 4.0]:
            fd1 = (s(t + h) - s(max(t - h, 0.0))) / (h + min(t, h))
            assert np.isclose(s(t, order=1), fd1, rtol=1e-4)
        # higher orders against the analytic chain on a shifted point
        t = 2.0
        fd2 = (s(t + h, order=1) - s(t - h, order=1)) / (2 * h)
        assert np.isclose(s(t, order=2), fd2, rtol=1e-4)
        fd3 = (s(t + h, order=2) - s(t - h, order=2)) / (2 * h)
        assert np.isclose(s(t, order=3), fd3, rtol=1e-4)

    def test_constant_and_zero(self):
        c = Schedule.constant(0.3)
        assert c(10.0) == 0.3
        assert c(10.0, order=1) == 0.0
        z = Schedule.zero()
        assert z(5.0) == 0.0
        assert z(5.0, order=2) == 0.0

    def test_table_interpolates_and_rejects_derivatives(self):
        s = Schedule.from_table([0.0, 1.0, 2.0], [1.0, 0.5, 0.25])
        assert s(0.5) == 0.75
        with pytest.raises(UnsupportedDerivativeError):
            s(0.5, order=1)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            Schedule.power(1.0, 1.0)(-0.1)


class TestIntegrability:
    def test_power_classification(self):
        assert Schedule.power(1.0, 0.5).integrable_flag == NON_INTEGRABLE
        assert Schedule.power(1.0, 1.0).integrable_flag == NON_INTEGRABLE
        assert Schedule.power(1.0, 1.5).integrable_flag == INTEGRABLE
        assert Schedule.power(1.0, 2.0).integrable_flag == INTEGRABLE

    def test_constant_zero_table(self):
        assert Schedule.constant(1.0).integrable_flag == NON_INTEGRABLE
        assert Schedule.constant(0.0).integrable_flag == INTEGRABLE
        assert Schedule.zero().integrable_flag == INTEGRABLE
        t = Schedule.from_table([0.0, 1.0], [1.0, 0.5])
        assert t.integrable_flag == UNKNOWN


def test_assumption_grid_shape():
    g = assumption_grid(50.0, gamma=0.1)
    assert g[0] == 0.0
    assert g[-1] == 50.0
    assert np.all(np.diff(g) > 0)
    # geometric interior: consecutive ratios of 2
    interior = g[1:-1]
    assert np.allclose(interior[1:] / interior[:-1], 2.0)


class TestMassDominated:
    def test_power_pair_holds(self):
        grid = assumption_grid(50.0)
        rep = check_mass_dominated(Schedule.power(1.0, 1.0),
                                   Schedule.power(2.0, 2.0), grid)
        assert rep.holds
        assert rep.c1 == 1.0
        assert rep.c2 == 2.0

    def test_alpha_decays_slower_fails(self):
        grid = assumption_grid(50.0)
        rep = check_mass_dominated(Schedule.power(1.0, 2.0),
                                   Schedule.power(1.0, 1.0), grid)
        assert rep.holds is False

    def test_zero_alpha_trivially_dominated(self):
        grid = assumption_grid(50.0)
        rep = check_mass_dominated(Schedule.power(1.0, 1.0),
                                   Schedule.zero(), grid)
        assert rep.holds and rep.c2 == 0.0

    def test_table_eps_hitting_floor_raises(self):
        s = Schedule.from_table([0.0, 50.0], [1.0, 0.0])
        with pytest.raises(DegenerateScheduleError):
            check_mass_dominated(s, Schedule.zero(), assumption_grid(50.0))

    def test_table_fit_matches_analytic(self):
        grid = assumption_grid(50.0)
        ts = np.linspace(0.0, 60.0, 6001)
        eps_tab = Schedule.from_table(ts, 1.0 / (ts + 1.0))
        rep = check_mass_dominated(eps_tab, Schedule.zero(), grid)
        assert rep.holds
        # |eps'|/eps = 1/(t+1), maximal ~1 at t=0
        assert rep.c1 == pytest.approx(1.0, rel=1e-2)


class TestSubexponential:
    def test_power_pair(self):
        grid = assumption_grid(50.0)
        rep = check_subexponential(Schedule.power(1.0, 2.0),
                                   Schedule.power(1.0, 1.0), grid)
        assert rep.holds
        assert rep.c1 == 2.0 and rep.c2 == 1.0

    def test_zero_alpha(self):
        rep = check_subexponential(Schedule.power(1.0, 1.0),
                                   Schedule.zero(), assumption_grid(10.0))
        assert rep.holds and rep.c2 == 0.0


class TestSmallInitialMass:
    def test_known_pass_and_fail(self):
        # lam = beta = 1, alpha = 0: bound = 1/4 = 0.25
        grid = assumption_grid(50.0)
        ok = check_small_initial_mass(Schedule.power(0.1, 1.0),
                                      Schedule.zero(), 1.0, 1.0, grid)
        assert ok.holds
        assert ok.c1 == pytest.approx(0.25, abs=1e-12)
        bad = check_small_initial_mass(Schedule.power(0.3, 1.0),
                                       Schedule.zero(), 1.0, 1.0, grid)
        assert bad.holds is False

    def test_damping_slope_tightens_bound(self):
        grid = assumption_grid(50.0)
        rep = check_small_initial_mass(Schedule.power(0.1, 1.0),
                                       Schedule.power(1.0, 1.0), 1.0, 1.0,
                                       grid)
        # |alpha'(0)| = 1 so the worst bound is 1/(2+4) at t=0
        assert rep.c1 == pytest.approx(1.0 / 6.0, rel=1e-12)


class TestTailIntegrability:
    def test_vanishing_power_mass_holds(self):
        rep = check_tail_integrability(Schedule.power(0.1, 2.0),
                                       Schedule.zero())
        assert rep.holds

    def test_constant_mass_fails(self):
        rep = check_tail_integrability(Schedule.constant(0.1),
                                       Schedule.zero())
        assert rep.holds is False

    def test_table_gives_unknown(self):
        rep = check_tail_integrability(
            Schedule.from_table([0.0, 1.0], [1.0, 0.5]), Schedule.zero())
        assert rep.holds is None
