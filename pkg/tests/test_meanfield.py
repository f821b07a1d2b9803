import numpy as np
import pytest

from superrad.meanfield import (
    MeanFieldState,
    default_tip_angle,
    mf_delay,
    mf_evolve,
    mf_rhs,
    mf_steady,
    steady_fixed_point,
)


class TestRhs:
    def test_south_pole_is_fixed_point(self):
        d = mf_rhs(MeanFieldState(j_plus=0.0, j_z=-10.0), omega=0.0, delta=0.0, gamma=1.0)
        assert d.j_plus == 0.0
        assert d.j_z == 0.0

    def test_fluctuation_growth_at_north_pole(self):
        n, eps, gamma = 20, 1e-6, 1.3
        d = mf_rhs(MeanFieldState(j_plus=eps, j_z=n / 2), omega=0.0, delta=0.0, gamma=gamma)
        assert abs(d.j_plus - gamma * eps * n / 2) < 1e-18
        assert d.j_plus.real > 0

    @pytest.mark.parametrize("omega,gamma,n", [(0.4, 1.0, 10), (1.0, 0.5, 20), (5.0, 0.1, 12)])
    def test_steady_state_has_zero_derivative(self, omega, gamma, n):
        st = steady_fixed_point(omega, gamma, n)
        d = mf_rhs(st, omega, 0.0, gamma)
        assert abs(d.j_plus) <= 1e-10
        assert abs(d.j_z) <= 1e-10


class TestEvolve:
    def test_south_pole_stays_put(self):
        t, ch = mf_evolve(0.0, 0.0, 1.0, 10, np.pi, np.linspace(0, 5, 11))
        assert np.max(np.abs(ch["jz"] + 5.0)) < 1e-8
        assert np.max(np.abs(ch["intensity"])) < 1e-8

    def test_pulse_peak_near_delay_law(self):
        n, gamma = 20, 1.0
        t_grid = np.linspace(0, 20 * mf_delay(gamma, n), 2001)
        _, ch = mf_evolve(0.0, 0.0, gamma, n, None, t_grid)
        t_peak = t_grid[np.argmax(ch["intensity"])]
        law = mf_delay(gamma, n)
        assert abs(t_peak - law) / law < 0.5

    def test_large_n_agrees_better(self):
        rel = {}
        for n in (20, 100):
            t_grid = np.linspace(0, 20 * mf_delay(1.0, n), 4001)
            _, ch = mf_evolve(0.0, 0.0, 1.0, n, None, t_grid)
            t_peak = t_grid[np.argmax(ch["intensity"])]
            rel[n] = abs(t_peak - mf_delay(1.0, n)) / mf_delay(1.0, n)
        assert rel[100] < rel[20]

    def test_bloch_radius_conserved_in_free_decay(self):
        n = 30
        t_grid = np.linspace(0, 1.0, 101)
        _, ch = mf_evolve(0.0, 0.0, 1.0, n, None, t_grid)
        assert np.max(np.abs(ch["bloch_radius"] - n / 2)) < 1e-7

    def test_rejects_bad_tip_angle(self):
        with pytest.raises(ValueError):
            mf_evolve(0.0, 0.0, 1.0, 10, 0.0, np.linspace(0, 1, 5))

    def test_default_tip_angle_value(self):
        assert default_tip_angle(16) == 0.5


class TestSteady:
    def test_ordered_branch_values(self):
        # Strong decay: J+J- = omega^2/gamma^2, ordered imbalance.
        st = mf_steady(omega=1.0, gamma=1.0, n_atoms=20)  # 2 omega < gamma N
        assert not st.saturated
        assert abs(st.jp_jm - 1.0) < 1e-14
        assert abs(st.j_z + np.sqrt(100.0 - 1.0)) < 1e-12

    def test_saturated_branch_values(self):
        # Strong driving: imbalance saturates to zero, J+J- = N^2/4.
        st = mf_steady(omega=30.0, gamma=1.0, n_atoms=20)
        assert st.saturated
        assert st.j_z == 0.0
        assert abs(st.jp_jm - 100.0) < 1e-14

    def test_branch_continuity_at_transition(self):
        n, gamma = 20, 1.0
        omega_c = gamma * n / 2
        below = mf_steady(omega_c * (1 - 1e-12), gamma, n)
        above = mf_steady(omega_c * (1 + 1e-12), gamma, n)
        assert abs(below.jp_jm - above.jp_jm) / above.jp_jm < 1e-9
        assert abs(below.j_z - above.j_z) < 1e-3 * n

    def test_no_drive_is_all_ground(self):
        st = mf_steady(0.0, 2.0, 14)
        assert st.jp_jm == 0.0
        assert st.j_z == -7.0

    def test_large_gamma_intensity_trend(self):
        # gamma -> large: intensity = gamma * J+J- = omega^2 / gamma -> 0.
        omega = 1.0
        values = [g * mf_steady(omega, g, 20).jp_jm for g in (1.0, 10.0, 100.0)]
        assert values[0] > values[1] > values[2]
        assert abs(values[2] - omega**2 / 100.0) < 1e-12

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            mf_steady(-1.0, 1.0, 10)
        with pytest.raises(ValueError):
            mf_steady(1.0, 0.0, 10)


class TestDelay:
    def test_formula_value(self):
        assert abs(mf_delay(1.0, 20) - np.log(20) / 20) == 0.0

    def test_gamma_scaling(self):
        assert abs(mf_delay(2.0, 20) - mf_delay(1.0, 20) / 2) < 1e-18

    def test_scaled_identity_exact(self):
        for n in (2, 10, 80):
            for gamma in (0.5, 1.0, 4.0):
                assert mf_delay(gamma, n) * gamma * n - np.log(n) == 0.0

    def test_monotone_decreasing_in_gamma(self):
        gammas = np.linspace(0.1, 5, 30)
        vals = [mf_delay(g, 20) for g in gammas]
        assert np.all(np.diff(vals) < 0)

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            mf_delay(1.0, 1)
