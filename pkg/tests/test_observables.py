import numpy as np
import pytest

from superrad.algebra import build_three_level_basis, build_two_level_basis, ladder_operators
from superrad.observables import (
    PulseSummary,
    TimeSeries,
    delay_time,
    integrated_intensity,
    intensity,
    intensity_operator,
    peak_intensity_per_atom,
    uncertainties,
)
from superrad.states import StateVector, all_excited_state, all_metastable_state, pure_state


class TestIntensity:
    def test_all_ground_is_dark(self):
        basis = build_two_level_basis(5)
        assert intensity(pure_state(basis, 0), gamma=2.0) == 0.0

    def test_inverted_state_total_and_per_atom(self):
        n, gamma = 13, 0.7
        basis = build_two_level_basis(n)
        val = intensity(all_excited_state(basis), gamma)
        assert abs(val - gamma * n) < 1e-10
        assert abs(val / n - gamma) < 1e-10

    def test_three_level_channel_is_e_to_g(self):
        basis = build_three_level_basis(3)
        psi = all_metastable_state(basis)
        assert intensity(psi, 1.0) == 0.0
        excited = pure_state(basis, (0, 3, 0))
        # J_eg J_ge eigenvalue on (0, 3, 0): n_e (n_g + 1) = 3.
        assert abs(intensity(excited, 2.0) - 6.0) < 1e-10

    def test_pure_state_cross_check(self):
        # gamma <J+J-> equals gamma ||J- psi||^2, two routes within 1e-10.
        rng = np.random.default_rng(3)
        basis = build_two_level_basis(6)
        amp = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        psi = StateVector(basis, amp / np.linalg.norm(amp))
        jm = ladder_operators(basis).jm.matrix
        direct = 1.3 * float(np.linalg.norm(jm @ psi.amplitudes) ** 2)
        assert abs(intensity(psi, 1.3) - direct) < 1e-10


class TestDelayTime:
    def test_monotone_decay_flags_boundary(self):
        t = np.linspace(0, 5, 50)
        ps = delay_time(TimeSeries(t=t, channels={"intensity": np.exp(-t)}))
        assert ps.at_boundary
        assert ps.peak_time == 0.0

    def test_parabola_recovered_exactly(self):
        t = np.linspace(0, 4, 17)
        y = 5.0 - (t - 2.0) ** 2
        ps = delay_time(TimeSeries(t=t, channels={"intensity": y}))
        assert not ps.at_boundary
        assert abs(ps.peak_time - 2.0) < 1e-9
        assert abs(ps.peak_value - 5.0) < 1e-9

    def test_off_grid_parabola_vertex(self):
        t = np.linspace(0, 4, 17)
        y = 3.0 - (t - 1.9371) ** 2
        ps = delay_time(TimeSeries(t=t, channels={"intensity": y}))
        assert abs(ps.peak_time - 1.9371) < 1e-9

    def test_time_reflection_symmetry(self):
        rng = np.random.default_rng(8)
        t = np.linspace(0, 3, 31)
        y = np.exp(-((t - 1.23) ** 2) / 0.2) + 0.01 * rng.random(31)
        fwd = delay_time(TimeSeries(t=t, channels={"intensity": y}))
        rev = delay_time(TimeSeries(t=t, channels={"intensity": y[::-1].copy()}))
        assert abs((3.0 - rev.peak_time) - fwd.peak_time) < 1e-9

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError):
            delay_time(TimeSeries(t=np.array([]), channels={"intensity": np.array([])}))

    def test_peak_not_below_endpoints(self):
        t = np.linspace(0, 2, 21)
        y = np.sin(np.pi * t / 2.0)
        ps = delay_time(TimeSeries(t=t, channels={"intensity": y}))
        assert ps.peak_value >= y[0] and ps.peak_value >= y[-1]


class TestUncertainties:
    def test_inverted_state(self):
        n = 16
        dx, dy, dz = uncertainties(all_excited_state(build_two_level_basis(n)))
        assert abs(dx - np.sqrt(n) / 2) < 1e-10
        assert abs(dy - np.sqrt(n) / 2) < 1e-10
        assert dz < 1e-10

    def test_south_pole_matches_north(self):
        n = 9
        basis = build_two_level_basis(n)
        dx, dy, dz = uncertainties(pure_state(basis, 0))
        assert abs(dx - np.sqrt(n) / 2) < 1e-10
        assert abs(dy - np.sqrt(n) / 2) < 1e-10
        assert dz < 1e-10

    def test_rejects_three_level(self):
        with pytest.raises(ValueError):
            uncertainties(all_metastable_state(build_three_level_basis(2)))


class TestPulseMetrics:
    def test_constant_series(self):
        t = np.linspace(0, 1, 11)
        ts = TimeSeries(t=t, channels={"intensity": np.full(11, 3.0)})
        assert abs(peak_intensity_per_atom(ts, 6) - 0.5) < 1e-12

    def test_energy_balance_free_decay(self):
        # Integrated intensity equals the drop of <Jz> within 1% (trapezoid).
        from superrad.lindblad import HamiltonianSpec, LindbladProblem, evolve
        from superrad.mcwf import observable_weights

        n = 8
        basis = build_two_level_basis(n)
        problem = LindbladProblem(basis, HamiltonianSpec("none"), 1.0)
        t = np.linspace(0, 12, 601)
        res = evolve(problem, all_excited_state(basis), t)
        w = observable_weights(problem)
        intens = np.array([w["intensity"] @ np.real(np.diag(r.matrix)) for r in res.states])
        jz = np.array([w["jz"] @ np.real(np.diag(r.matrix)) for r in res.states])
        ts = TimeSeries(t=t, channels={"intensity": intens})
        emitted = integrated_intensity(ts)
        assert abs(emitted - (jz[0] - jz[-1])) / n < 0.01

    def test_intensity_operator_shapes(self):
        assert intensity_operator(build_two_level_basis(4)).shape == (5, 5)
        assert intensity_operator(build_three_level_basis(2)).shape == (6, 6)
