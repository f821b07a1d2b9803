import numpy as np
import pytest

from superrad.integrators import StepSizeUnderflow, integrate_adaptive


def test_exponential_decay_accuracy():
    t = np.linspace(0, 5, 21)
    res = integrate_adaptive(lambda _, y: -y, (0, 5), np.array([1.0 + 0j]), t)
    assert np.max(np.abs(res.y[:, 0] - np.exp(-t))) < 1e-8


def test_oscillator_matches_reference_accuracy():
    t = np.linspace(0, 20, 41)
    res = integrate_adaptive(
        lambda _, y: np.array([y[1], -y[0]]), (0, 20), np.array([1.0 + 0j, 0j]), t
    )
    # Global error at rtol 1e-8 over 20 time units; scipy's RK45 lands at ~2e-8.
    assert np.max(np.abs(res.y[:, 0] - np.cos(t))) < 1e-7
    assert res.n_rejected < 0.1 * res.n_steps


def test_dense_output_between_steps():
    # Many more sample points than steps: interpolation, not stepping, supplies them.
    t = np.linspace(0, 1, 1001)
    res = integrate_adaptive(
        lambda _, y: np.array([y[1], -y[0]]), (0, 1), np.array([1.0 + 0j, 0j]), t
    )
    assert res.n_steps < 40
    assert np.max(np.abs(res.y[:, 0] - np.cos(t))) < 1e-8


def test_time_dependent_rhs_and_breakpoint():
    # y' continuous with a derivative kink at t=1 (the drive-envelope case);
    # the breakpoint keeps steps from straddling it.
    def rhs(t, y):
        return np.array([t + 0j]) if t <= 1.0 else np.array([2.0 - t + 0j])

    t = np.linspace(0, 2, 41)
    res = integrate_adaptive(rhs, (0, 2), np.array([0j]), t, breakpoints=[1.0])
    exact = np.where(t <= 1.0, t**2 / 2, 2 * t - t**2 / 2 - 1.0)
    assert np.max(np.abs(res.y[:, 0] - exact)) < 1e-9


def test_post_step_hook_applied_and_deviation_tracked():
    calls = []

    def hook(t, y):
        calls.append(t)
        return y.real.astype(np.complex128), float(np.max(np.abs(y.imag)))

    res = integrate_adaptive(
        lambda _, y: -y, (0, 1), np.array([1.0 + 1e-12j]), np.array([1.0]), post_step=hook
    )
    assert len(calls) == res.n_steps
    assert res.post_step_max_dev <= 2e-12
    assert abs(res.y[0, 0].imag) == 0.0


def test_step_size_underflow_reports_time():
    def stiff_blowup(t, y):
        # Derivative grows without bound approaching t = 0.5.
        return y / (0.5 - t)

    with pytest.raises(StepSizeUnderflow) as err:
        integrate_adaptive(stiff_blowup, (0, 1), np.array([1.0 + 0j]), np.array([1.0]))
    assert 0.4 < err.value.t_reached <= 0.5


def test_rejects_bad_grids():
    with pytest.raises(ValueError):
        integrate_adaptive(lambda t, y: -y, (0, 1), np.array([1.0 + 0j]), np.array([0.0, 2.0]))
    with pytest.raises(ValueError):
        integrate_adaptive(lambda t, y: -y, (1, 0), np.array([1.0 + 0j]), np.array([]))


def test_grid_point_at_start_and_end():
    t = np.array([0.0, 1.0])
    res = integrate_adaptive(lambda _, y: -y, (0, 1), np.array([2.0 + 0j]), t)
    assert res.y[0, 0] == 2.0 + 0j
    assert abs(res.y[1, 0] - 2.0 * np.exp(-1)) < 1e-9
