import numpy as np
import pytest
from scipy import stats

from superrad import mcwf
from superrad.algebra import build_three_level_basis, build_two_level_basis
from superrad.integrators import integrate_adaptive
from superrad.lindblad import HamiltonianSpec, LindbladProblem, evolve
from superrad.mcwf import (
    TrajectoryConfig,
    TrajectoryError,
    evolve_trajectory,
    mcwf_intensity,
    observable_weights,
    run_ensemble,
)
from superrad.states import StateVector, all_excited_state, all_metastable_state, pure_state


def excited_vector(n):
    basis = build_two_level_basis(n)
    amp = np.zeros(basis.dim, dtype=np.complex128)
    amp[-1] = 1.0
    return basis, StateVector(basis, amp)


class TestSingleTrajectory:
    def test_single_atom_waiting_times_exponential(self):
        # Jump time solves ||psi(t)||^2 = r, i.e. t = -ln(r)/gamma: exponential.
        basis, psi0 = excited_vector(1)
        problem = LindbladProblem(basis, HamiltonianSpec("none"), 1.0)
        t_grid = np.array([0.0, 50.0])
        times = []
        for i in range(4000):
            res = evolve_trajectory(
                problem, psi0, t_grid, np.random.SeedSequence(entropy=77, spawn_key=(i,))
            )
            assert res.jump_times.size == 1
            times.append(res.jump_times[0])
        ks = stats.kstest(times, "expon")
        assert ks.pvalue > 0.01

    def test_no_decay_means_no_jumps_and_unitary(self):
        n = 4
        basis = build_two_level_basis(n)
        problem = LindbladProblem(
            basis, HamiltonianSpec("constant_drive", omega=1.0, delta=0.3), 0.0
        )
        psi0 = pure_state(basis, n)
        t_grid = np.linspace(0, 4, 41)
        res = evolve_trajectory(problem, psi0, t_grid, seed=5)
        assert res.jump_times.size == 0
        assert np.max(np.abs(res.norm_sq - 1.0)) < 1e-8

        h0, _ = problem.hamiltonian_parts()
        ref = integrate_adaptive(
            lambda t, y: -1j * (h0 @ y), (0, 4), psi0.amplitudes, t_grid,
            rtol=1e-10, atol=1e-12,
        )
        assert np.max(np.abs(res.states - ref.y)) < 1e-6

    def test_raman_jump_count_bounded_by_n(self):
        n = 3
        basis = build_three_level_basis(n)
        problem = LindbladProblem(
            basis, HamiltonianSpec("raman_pulse", omega0=2.0, delta=1.0, t_pulse=5.0), 1.0
        )
        psi0 = all_metastable_state(basis)
        t_grid = np.linspace(0, 7.5, 16)
        for i in range(200):
            res = evolve_trajectory(
                problem, psi0, t_grid, np.random.SeedSequence(entropy=3, spawn_key=(i,))
            )
            assert res.jump_times.size <= n

    def test_norm_monotone_between_jumps(self):
        basis, psi0 = excited_vector(6)
        problem = LindbladProblem(basis, HamiltonianSpec("none"), 1.0)
        t_grid = np.linspace(0, 2, 400)
        res = evolve_trajectory(problem, psi0, t_grid, seed=21)
        boundaries = np.concatenate([[t_grid[0]], res.jump_times, [t_grid[-1] + 1]])
        for a, b in zip(boundaries[:-1], boundaries[1:]):
            inside = (t_grid > a) & (t_grid < b)
            seg = res.norm_sq[inside]
            assert np.all(np.diff(seg) <= 1e-12)

    def test_sampled_states_are_normalized(self):
        basis, psi0 = excited_vector(5)
        problem = LindbladProblem(basis, HamiltonianSpec("none"), 2.0)
        res = evolve_trajectory(problem, psi0, np.linspace(0, 1.5, 31), seed=9)
        norms = np.linalg.norm(res.states, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-10

    def test_deterministic_in_seed(self):
        basis, psi0 = excited_vector(5)
        problem = LindbladProblem(basis, HamiltonianSpec("none"), 1.0)
        t_grid = np.linspace(0, 2, 21)
        a = evolve_trajectory(problem, psi0, t_grid, seed=1234)
        b = evolve_trajectory(problem, psi0, t_grid, seed=1234)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.jump_times, b.jump_times)

    def test_unnormalized_initial_state_rejected(self):
        basis = build_two_level_basis(2)
        psi0 = StateVector(basis, np.array([0.5, 0, 0], dtype=complex))
        problem = LindbladProblem(basis, HamiltonianSpec("none"), 1.0)
        with pytest.raises(ValueError):
            evolve_trajectory(problem, psi0, np.linspace(0, 1, 5), seed=0)


class TestSectorPath:
    def test_sector_matches_dense_evolution(self, monkeypatch):
        n = 4
        basis = build_three_level_basis(n)
        problem = LindbladProblem(
            basis, HamiltonianSpec("raman_pulse", omega0=1.0, delta=1.0, t_pulse=5.0), 1.0
        )
        psi0 = all_metastable_state(basis)
        t_grid = np.linspace(0, 7.5, 31)
        assert mcwf._uses_sector_path(problem, psi0) == 0
        fast = evolve_trajectory(problem, psi0, t_grid, seed=7)
        monkeypatch.setattr(mcwf, "_uses_sector_path", lambda p, s: None)
        dense = evolve_trajectory(problem, psi0, t_grid, seed=7)
        assert fast.jump_times.size == dense.jump_times.size
        assert np.max(np.abs(fast.jump_times - dense.jump_times)) < 1e-6
        assert np.max(np.abs(fast.states - dense.states)) < 1e-6

    def test_dense_path_for_two_level(self):
        basis, psi0 = excited_vector(3)
        problem = LindbladProblem(basis, HamiltonianSpec("none"), 1.0)
        assert mcwf._uses_sector_path(problem, psi0) is None


class TestEnsemble:
    def test_mean_matches_master_equation(self):
        n = 10
        basis, psi0 = excited_vector(n)
        problem = LindbladProblem(basis, HamiltonianSpec("none"), 1.0)
        t_grid = np.linspace(0, 5 * np.log(n) / n, 101)
        config = TrajectoryConfig(500, 42, t_grid, problem, psi0)
        ens = run_ensemble(config)

        res = evolve(problem, all_excited_state(basis), t_grid)
        w = observable_weights(problem)
        exact = np.array([w["intensity"] @ np.real(np.diag(r.matrix)) for r in res.states])
        diff = np.abs(ens.means["intensity"] - exact)
        ok = (diff <= 3 * ens.std_errors["intensity"]) | (diff < 1e-9)
        assert ok.mean() >= 0.95

    def test_single_trajectory_ensemble_is_exact(self):
        basis, psi0 = excited_vector(4)
        problem = LindbladProblem(basis, HamiltonianSpec("none"), 1.0)
        t_grid = np.linspace(0, 1, 11)
        config = TrajectoryConfig(1, 77, t_grid, problem, psi0)
        ens = run_ensemble(config)
        res = evolve_trajectory(
            problem, psi0, t_grid, np.random.SeedSequence(entropy=77, spawn_key=(0,))
        )
        w = observable_weights(problem)
        expect = (np.abs(res.states) ** 2) @ w["intensity"]
        assert np.array_equal(ens.means["intensity"], expect)
        assert np.all(ens.std_errors["intensity"] == 0.0)

    def test_bit_identical_across_worker_counts(self):
        n = 6
        basis, psi0 = excited_vector(n)
        problem = LindbladProblem(basis, HamiltonianSpec("none"), 1.0)
        t_grid = np.linspace(0, 1.0, 21)
        config = TrajectoryConfig(12, 5, t_grid, problem, psi0)
        seq = run_ensemble(config, jobs=1)
        par = run_ensemble(config, jobs=2)
        for name in seq.means:
            assert np.array_equal(seq.means[name], par.means[name])
            assert np.array_equal(seq.std_errors[name], par.std_errors[name])
        assert np.array_equal(seq.jump_counts, par.jump_counts)

    def test_failure_propagates_with_index(self, monkeypatch):
        basis, psi0 = excited_vector(2)
        problem = LindbladProblem(basis, HamiltonianSpec("none"), 1.0)
        t_grid = np.linspace(0, 1, 5)
        real = mcwf.evolve_trajectory

        def flaky(problem, psi0, t_grid, seed, rtol=mcwf.MCWF_RTOL, atol=mcwf.MCWF_ATOL):
            if seed.spawn_key[-1] == 3:
                raise RuntimeError("synthetic failure")
            return real(problem, psi0, t_grid, seed, rtol=rtol, atol=atol)

        monkeypatch.setattr(mcwf, "evolve_trajectory", flaky)
        config = TrajectoryConfig(6, 0, t_grid, problem, psi0)
        with pytest.raises(TrajectoryError, match="trajectory 3"):
            run_ensemble(config)
        ens = run_ensemble(config, allow_failures=True)
        assert ens.failures and ens.failures[0][0] == 3
        assert ens.n_trajectories == 5


class TestIntensityHelper:
    def test_all_ground_dark(self):
        basis = build_two_level_basis(4)
        assert mcwf_intensity(pure_state(basis, 0), gamma=1.0) == 0.0

    def test_single_excited_atom(self):
        basis, psi0 = excited_vector(1)
        assert abs(mcwf_intensity(psi0, gamma=2.0) - 2.0) < 1e-12

    def test_inverted_ensemble_value(self):
        # Jp Jm |j,j> = 2j |j,j> so the rate is gamma N.
        n = 7
        basis, psi0 = excited_vector(n)
        assert abs(mcwf_intensity(psi0, gamma=1.5) - 1.5 * n) < 1e-10
